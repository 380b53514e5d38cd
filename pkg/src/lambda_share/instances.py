"""Seeded random instances for verification runs.

All masses and Lambda levels are multiples of ``1/D`` so that the oracle
can split atoms into equal units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lambda_fn import DistortionFunction, StepLambda, UtilityFunction
from .prob_core import EventSet, FiniteSpace
from .risk_measures import MeasureSpec


@dataclass
class Instance:
    space: FiniteSpace
    agents: list[MeasureSpec]
    X: np.ndarray
    tags: dict = field(default_factory=dict)


def composition(rng: np.random.Generator, D: int, K: int, positive: bool = True) -> np.ndarray:
    """Random weights on ``K`` atoms, each a multiple of ``1/D``."""
    if positive:
        if D < K:
            raise ValueError("need D >= K for strictly positive weights")
        cuts = np.sort(rng.choice(np.arange(1, D), size=K - 1, replace=False))
    else:
        cuts = np.sort(rng.integers(0, D + 1, size=K - 1))
    parts = np.diff(np.concatenate([[0], cuts, [D]]))
    return parts / D


def random_lambda(
    rng: np.random.Generator,
    D: int,
    pieces: int | None = None,
    span: tuple[int, int] = (0, 9),
    shape: str = "any",
    lo: int = 1,
    hi: int | None = None,
) -> StepLambda:
    """Step Lambda with levels in ``[lo/D, hi/D]`` and integer breakpoints."""
    hi = D - 1 if hi is None else hi
    k = int(rng.integers(1, 4)) if pieces is None else pieces
    bps = np.sort(rng.choice(np.arange(span[0], span[1] + 1), size=k - 1, replace=False)) if k > 1 else []
    vals = rng.integers(lo, hi + 1, size=k) / D
    if shape == "increasing":
        vals = np.sort(vals)
    elif shape == "decreasing":
        vals = np.sort(vals)[::-1]
    return StepLambda(tuple(float(b) for b in bps), tuple(float(v) for v in vals))


def random_values(rng: np.random.Generator, K: int, span: tuple[int, int] = (0, 9)) -> np.ndarray:
    return rng.integers(span[0], span[1] + 1, size=K).astype(float)


def lvar_instance(
    rng: np.random.Generator,
    n: int,
    K: int,
    D: int = 12,
    homogeneous: bool = False,
    singular_prob: float = 0.2,
    shape: str = "any",
) -> Instance:
    measures = {"P": composition(rng, D, K)}
    agents = []
    hi = max(1, D // (n + 1))
    for i in range(n):
        q = "P"
        if not homogeneous:
            q = f"Q{i + 1}"
            if rng.random() < 0.5:
                measures[q] = measures["P"]
            else:
                measures[q] = composition(rng, D, K, positive=rng.random() > singular_prob)
        lam_hi = D - 1 if rng.random() < 0.25 else hi
        agents.append(MeasureSpec("lambda_var", q, lam=random_lambda(rng, D, shape=shape, hi=lam_hi)))
    space = FiniteSpace(tuple(f"w{k + 1}" for k in range(K)), measures, reference="P")
    return Instance(space, agents, random_values(rng, K))


def conditional_instance(
    rng: np.random.Generator, n: int, K: int, constants: bool = True
) -> tuple[Instance, list[EventSet]]:
    """Uniform base measure with beliefs conditioned on random crisp events."""
    P = np.full(K, 1.0 / K)
    events = []
    measures = {"P": P}
    agents = []
    for i in range(n):
        size = int(rng.integers(max(1, K // 2), K + 1))
        idx = rng.choice(K, size=size, replace=False)
        B = EventSet.from_atoms(K, idx)
        events.append(B)
        measures[f"Q{i + 1}"] = B.membership * P / float(B.membership @ P)
        D = K * 4
        lam = StepLambda.constant(int(rng.integers(1, D // 3)) / D) if constants else random_lambda(rng, D)
        agents.append(MeasureSpec("lambda_var", f"Q{i + 1}", lam=lam))
    space = FiniteSpace(tuple(f"w{k + 1}" for k in range(K)), measures, reference="P")
    return Instance(space, agents, random_values(rng, K)), events


def singular_instance(rng: np.random.Generator, n: int, K: int) -> Instance:
    """Beliefs concentrated on disjoint blocks of atoms."""
    blocks = np.array_split(rng.permutation(K), n)
    measures = {"P": np.full(K, 1.0 / K)}
    agents = []
    for i, blk in enumerate(blocks):
        w = np.zeros(K)
        w[blk] = 1.0 / len(blk)
        measures[f"Q{i + 1}"] = w
        agents.append(MeasureSpec("lambda_var", f"Q{i + 1}", lam=random_lambda(rng, 12)))
    space = FiniteSpace(tuple(f"w{k + 1}" for k in range(K)), measures, reference="P")
    return Instance(space, agents, random_values(rng, K))


def abscont_instance(rng: np.random.Generator, K: int, D: int = 12) -> Instance:
    """Two Lambda-VaR agents whose second belief is absolutely continuous w.r.t. the first."""
    q1 = composition(rng, D, K)
    q2 = composition(rng, D, K, positive=False)
    hi = max(1, D // 3)
    agents = [
        MeasureSpec("lambda_var", "Q1", lam=random_lambda(rng, D, hi=hi)),
        MeasureSpec("lambda_var", "Q2", lam=random_lambda(rng, D, hi=hi)),
    ]
    space = FiniteSpace(tuple(f"w{k + 1}" for k in range(K)), {"Q1": q1, "Q2": q2}, reference="Q1")
    return Instance(space, agents, random_values(rng, K))


RHO_KINDS = ("var", "es", "expected_utility", "lambda_var", "distortion")


def random_rho(rng: np.random.Generator, kind: str, belief: str, D: int = 12, concave: bool | None = None) -> MeasureSpec:
    """A second agent of the given kind with parameters on the ``1/D`` grid."""
    if kind == "var":
        return MeasureSpec("var", belief, alpha=int(rng.integers(D // 2, D)) / D)
    if kind == "es":
        return MeasureSpec("es", belief, alpha=int(rng.integers(D // 2, D + 1)) / D)
    if kind in ("lambda_var", "lambda_var_plus"):
        return MeasureSpec(kind, belief, lam=random_lambda(rng, D, hi=max(1, D // 3)))
    if kind == "expected_utility":
        xs = np.sort(rng.choice(np.arange(-3, 8), size=3, replace=False)).astype(float)
        slopes = rng.integers(1, 5, size=2) / 4
        us = [0.0, slopes[0] * (xs[1] - xs[0])]
        us.append(us[1] + slopes[1] * (xs[2] - xs[1]))
        floor = -1.0 if rng.random() < 0.7 else -np.inf
        return MeasureSpec("expected_utility", belief, u=UtilityFunction(tuple(zip(xs, us)), floor))
    if kind == "distortion":
        c = int(rng.integers(2, D)) / D
        a = c * rng.random()
        b = a + (1 - a) * rng.random()
        if concave is False or (concave is None and rng.random() < 0.3):
            b = a * rng.random()
        return MeasureSpec("distortion", belief, g=DistortionFunction(((0.0, 0.0), (a, b), (c, 1.0), (1.0, 1.0))))
    raise ValueError(f"unknown kind {kind!r}")


def lvar_rho_instance(
    rng: np.random.Generator, K: int, kind: str, plus: bool = False, D: int = 12, shape: str = "any",
    shared: bool | None = None,
) -> Instance:
    """A Lambda-VaR (or Lambda-VaR+) agent and a second agent of ``kind``."""
    q1 = composition(rng, D, K)
    same = rng.random() < 0.5 if shared is None else shared
    q2 = q1 if same else composition(rng, D, K, positive=False)
    L = random_lambda(rng, D, hi=max(1, D // 3), shape=shape)
    first = MeasureSpec("lambda_var_plus" if plus else "lambda_var", "Q1", lam=L)
    space = FiniteSpace(tuple(f"w{k + 1}" for k in range(K)), {"Q1": q1, "Q2": q2}, reference="Q1")
    return Instance(space, [first, random_rho(rng, kind, "Q2", D)], random_values(rng, K), {"kind": kind})


def step_instance(rng: np.random.Generator, K: int, kind: str, D: int = 12) -> Instance:
    """Lambda-VaR+ agent with ``Lambda = 1 - lam1`` left of ``x1`` and ``1 - lam2`` right of it."""
    l1, l2 = np.sort(rng.choice(np.arange(D - 4, D), size=2, replace=False))
    L = StepLambda((float(rng.integers(0, 10)),), (1 - l1 / D, 1 - l2 / D))
    inst = lvar_rho_instance(rng, K, kind, plus=True, D=D)
    inst.agents[0] = MeasureSpec("lambda_var_plus", "Q1", lam=L)
    return inst
