"""One Lambda-VaR agent sharing with an arbitrary monotone functional.

For a level ``x`` the first agent is charged ``x`` and keeps the excess
``X - x`` off a set ``B`` of first-belief mass ``1 - Lambda(x)``; the second
agent carries ``X - x`` on ``B`` and a constant ``y`` elsewhere.  Pushing
``y`` down never hurts a monotone functional, so ``y`` is handled by two
probes and only ``(x, B)`` is searched.

With ``x`` fixed the law of the second agent's position is linear in the
membership vector of ``B``.  For functionals that are quasi-concave along
mixtures (quantiles, Lambda-VaR, concave distortions such as ES, expected
utility) the minimum over the polytope of admissible memberships sits at a
vertex: every atom fully in or out except at most one.  Those vertices are
enumerated exactly.
"""

from __future__ import annotations

import math

import numpy as np

from ..lambda_fn import StepLambda, check_bounds
from ..prob_core import EPS, EventSet, FiniteSpace, conditional_measure, values_of
from ..risk_measures import MeasureSpec, batch, effective_weights
from .general import DEFAULT_CAP
from .lattice import TOL, ScanResult, scan
from .result import (
    NEG_INF,
    CapExceededError,
    InfConvError,
    InfConvResult,
    allocation_from_sets,
    descent_certificate,
    probe_scale,
)

# distortions whose functional is concave along mixtures keep the vertex argument exact
_QUASI_CONCAVE = ("var", "lambda_var", "expected_utility", "es")


def is_quasi_concave(spec: MeasureSpec) -> bool:
    if spec.base_kind in _QUASI_CONCAVE:
        return True
    g = spec.distortion()
    return g is not None and g.is_concave()


def set_vertices(w1: np.ndarray, mass: float, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Memberships with ``w1``-mass ``mass``: all atoms crisp but one.

    Atoms without ``w1`` mass stay outside; for a monotone functional
    leaving them to the constant ``y`` is never worse.
    """
    pos = np.flatnonzero(w1 > EPS)
    p = pos.size
    if (2**p) * max(p, 1) > cap:
        raise CapExceededError(f"{2**p * p} candidate sets exceed the cap of {cap}")
    bits = ((np.arange(2**p)[:, None] >> np.arange(p)[None, :]) & 1).astype(float)
    wp = w1[pos]
    s = bits @ wp
    rows = [bits[np.abs(s - mass) <= 1e-12]]
    for j in range(p):
        f = (mass - s) / wp[j]
        ok = (bits[:, j] == 0) & (f > 1e-12) & (f < 1.0 - 1e-12)
        part = bits[ok].copy()
        part[:, j] = f[ok]
        rows.append(part)
    sub = np.concatenate(rows, axis=0)
    out = np.zeros((sub.shape[0], w1.size))
    out[:, pos] = sub
    return out


class SetObjective:
    """``x + rho((X - x) 1_B + y 1_{B^c})`` for a stack of memberships ``B``."""

    def __init__(self, space: FiniteSpace, agent2: MeasureSpec, X, M: float):
        self.space = space
        self.agent2 = agent2
        self.v = values_of(X, space)
        self.w2 = effective_weights(space, agent2)
        self.knots = tuple(agent2.shift_knots)
        self.M = M

    def y_probe(self, x: float, scale: float) -> float:
        low = min([float(self.v.min()) - x] + list(self.knots))
        return low - 1.0 - scale * self.M

    def rho(self, x: float, F: np.ndarray, scale: float) -> np.ndarray:
        y = self.y_probe(x, scale)
        R, K = F.shape
        vals = np.concatenate([np.broadcast_to(self.v - x, (R, K)), np.full((R, K), y)], axis=1)
        probs = np.concatenate([F * self.w2, (1.0 - F) * self.w2], axis=1)
        return batch(self.agent2, vals, probs)

    def __call__(self, x: float, F: np.ndarray):
        if F.shape[0] == 0:
            return np.zeros(0), np.zeros(0, dtype=bool)
        r1 = self.rho(x, F, 1.0)
        r4 = self.rho(x, F, 4.0)
        desc = np.isneginf(r1) | (r4 < r1 - TOL)
        return x + r1, desc


def lattice(v: np.ndarray, L: StepLambda, knots) -> list[float]:
    pts = set(float(b) for b in L.breakpoints)
    for c in tuple(knots) + (0.0,):
        pts.update(float(t) - c for t in v)
    return sorted(pts)


def set_witness(space: FiniteSpace, v: np.ndarray, x: float, y: float, row: np.ndarray):
    """First agent: ``x`` on ``B`` and ``X - y`` off it; second agent: the rest."""
    B = EventSet(np.asarray(row, dtype=float))
    return allocation_from_sets(space, v, x + y, (x, y), (B.complement(), B))


def _finish(
    space, q1_id, L, agent2, v, objective: SetObjective, rows_for, found: ScanResult,
    method: str, diagnostics: dict,
) -> InfConvResult:
    agents = (MeasureSpec("lambda_var", q1_id, lam=L), agent2)
    diagnostics = dict(diagnostics, evaluations=found.evaluations, found_at=found.where)
    if found.value == NEG_INF:
        d = found.descent
        x = float(d["x"]) if d["parameter"] == "inner" else float(found.x)
        F = rows_for(x)
        row = F[found.row]
        if d["parameter"] == "inner":
            probes = [(s * objective.M, float(x + objective.rho(x, row[None, :], s)[0])) for s in (1.0, 4.0)]
        else:
            probes = d["probes"]
        cert = descent_certificate(
            "descent", probes, descending=True, parameter=d["parameter"], x=x,
            set=row.tolist(),
        )
        res = InfConvResult(NEG_INF, method, None, {}, diagnostics, cert)
        res.agents = agents
        return res
    x = float(found.x)
    if not found.attained:
        diagnostics["attained"] = False
        res = InfConvResult(found.value, method, None, {"x_star": x}, diagnostics)
        res.agents = agents
        return res
    row = rows_for(x)[found.row]
    y = objective.y_probe(x, 1.0)
    wit = set_witness(space, v, x, y, row)
    params = {"x_star": x, "y_star": y, "set": row.tolist()}
    diagnostics["attained"] = True
    res = InfConvResult(found.value, method, wit, params, diagnostics)
    res.agents = agents
    return res


def infconv_lvar_rho(
    space: FiniteSpace, q1_id: str, L: StepLambda, agent2: MeasureSpec, X, cap: int = DEFAULT_CAP
) -> InfConvResult:
    """``Lambda-VaR^{Q1} box rho^{Q2}`` by exhaustive search over vertex sets."""
    check_bounds(L)
    v = values_of(X, space)
    w1 = space.weights(q1_id)
    knots = agent2.shift_knots
    M = probe_scale(v, [L], extra=knots)
    objective = SetObjective(space, agent2, v, M)
    cache: dict[float, np.ndarray] = {}

    def rows_for(x):
        m = 1.0 - L(x)
        if m not in cache:
            cache[m] = set_vertices(w1, m, cap)
        return cache[m]

    found = scan(lattice(v, L, knots), lambda x: objective(x, rows_for(x)), M)
    diag = {"exact_set_search": is_quasi_concave(agent2), "set_search": "vertices"}
    return _finish(space, q1_id, L, agent2, v, objective, rows_for, found, "thone", diag)


def lowest_first(P: np.ndarray, within: np.ndarray, v: np.ndarray, mass: float) -> np.ndarray:
    """Membership of the part of ``within`` with ``P``-mass ``mass`` where ``v`` is smallest."""
    member = np.zeros(P.size)
    left = mass
    for k in np.argsort(v, kind="stable"):
        if within[k] < 0.5 or P[k] <= 0:
            continue
        if left <= EPS:
            break
        take = min(1.0, left / P[k])
        member[k] = take
        left -= take * P[k]
    return member


def conditional_set(P, B1, B2, v, lam: float) -> np.ndarray:
    """The set ``A_x``, padded inside ``B1 \\ B2`` up to first-belief mass ``1 - lam``."""
    p1 = float(B1 @ P)
    only1 = B1 * (1.0 - B2)
    p_only = float(only1 @ P)
    need = (1.0 - lam) * p1
    if p_only >= need - EPS:
        # invisible to the second agent: any part of B1 \ B2 with the right mass
        return only1 * (need / p_only) if p_only > 0 else only1
    return only1 + lowest_first(P, B1 * B2, v, need - p_only)


def conditional_space(space: FiniteSpace, p_id: str, B1: EventSet, B2: EventSet):
    for i, B in enumerate((B1, B2)):
        if not B.is_crisp:
            raise InfConvError(f"conditioning event {i + 1} must be crisp")
        if B.prob(space, p_id) <= 0:
            raise InfConvError(f"conditioning event {i + 1} has zero probability")
    sp, q1 = conditional_measure(space, p_id, B1, f"{p_id}|B1")
    sp, q2 = conditional_measure(sp, p_id, B2, f"{p_id}|B2")
    return sp, q1, q2


def rebelieve(spec: MeasureSpec, q_id: str) -> MeasureSpec:
    return MeasureSpec(spec.kind, q_id, alpha=spec.alpha, lam=spec.lam, g=spec.g, u=spec.u,
                       event=spec.event, literal=spec.literal)


def infconv_lvar_rho_conditional(
    space: FiniteSpace, p_id: str, B1: EventSet, B2: EventSet, L: StepLambda, agent2: MeasureSpec, X
) -> InfConvResult:
    """Same problem with ``Q_i = P(. | B_i)``, where the optimal set is explicit.

    ``agent2`` supplies the functional; its belief is replaced by ``P(. | B2)``.
    """
    check_bounds(L)
    sp, q1, q2 = conditional_space(space, p_id, B1, B2)
    agent2 = rebelieve(agent2, q2)
    v = values_of(X, space)
    P = space.weights(p_id)
    knots = agent2.shift_knots
    M = probe_scale(v, [L], extra=knots)
    objective = SetObjective(sp, agent2, v, M)

    def rows_for(x):
        return conditional_set(P, B1.membership, B2.membership, v, L(x))[None, :]

    found = scan(lattice(v, L, knots), lambda x: objective(x, rows_for(x)), M)
    diag = {"q1_of_b2": float((B1.membership * B2.membership) @ P) / float(B1.membership @ P)}
    return _finish(sp, q1, L, agent2, v, objective, rows_for, found, "thone-conditional", diag)


__all__ = [
    "SetObjective",
    "conditional_set",
    "conditional_space",
    "infconv_lvar_rho",
    "infconv_lvar_rho_conditional",
    "is_quasi_concave",
    "lattice",
    "lowest_first",
    "rebelieve",
    "set_vertices",
    "set_witness",
]
