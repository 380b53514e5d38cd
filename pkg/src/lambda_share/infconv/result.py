"""Result containers, witnesses and helpers shared by the engines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..lambda_fn import StepLambda
from ..prob_core import EventSet, FiniteSpace, lift, partition_refinement, values_of
from ..risk_measures import MeasureSpec, batch, effective_weights

NEG_INF = -math.inf
WITNESS_TOL = 1e-9


class InfConvError(ValueError):
    pass


class CapExceededError(InfConvError):
    """Enumeration too large; ``lower``/``upper`` bound the value when known."""

    def __init__(self, message: str, lower: float | None = None, upper: float | None = None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class InapplicableError(InfConvError):
    pass


@dataclass
class Witness:
    """An allocation realised on a (possibly refined) copy of the space.

    ``sets`` live on the original atoms and may be fractional; ``allocation``
    holds one plain vector per agent on ``space``.
    """

    space: FiniteSpace
    allocation: tuple[np.ndarray, ...]
    y_star: tuple[float, ...] = ()
    sets: tuple[EventSet, ...] = ()

    def to_json(self) -> dict:
        return {
            "atoms": list(self.space.atoms),
            "y_star": [float(y) for y in self.y_star],
            "sets": [s.membership.tolist() for s in self.sets],
            "allocation": [a.tolist() for a in self.allocation],
        }


@dataclass
class InfConvResult:
    value: float
    method: str
    witness: Witness | None = None
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    certificate: dict | None = None
    # specs the witness was built for when they differ from the caller's
    agents: tuple = ()

    @property
    def is_neg_inf(self) -> bool:
        return self.value == NEG_INF

    def to_json(self) -> dict:
        out = {
            "value": ext_json(self.value),
            "method": self.method,
            "params": _plain(self.params),
            "diagnostics": _plain(self.diagnostics),
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.certificate is not None:
            out["certificate"] = _plain(self.certificate)
        return out


def ext_json(x: float):
    if x == NEG_INF:
        return "-inf"
    if x == math.inf:
        return "inf"
    return float(x)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return ext_json(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, EventSet):
        return obj.membership.tolist()
    if isinstance(obj, StepLambda):
        return obj.to_json()
    return obj


def probe_scale(values, lambdas: Sequence[StepLambda] = (), extra: Sequence[float] = ()) -> float:
    """Four value spans plus the breakpoint span, plus one so it is never zero."""
    v = np.asarray(values, dtype=float)
    bps = [b for L in lambdas for b in L.breakpoints] + [float(e) for e in extra]
    span_v = float(v.max() - v.min()) if v.size else 0.0
    span_b = (max(bps) - min(bps)) if bps else 0.0
    reach = max([abs(float(v.max())), abs(float(v.min()))] + [abs(b) for b in bps])
    return 4.0 * span_v + span_b + reach + 1.0


def allocation_from_sets(
    space: FiniteSpace, X, s: float, y: Sequence[float], sets: Sequence[EventSet]
) -> Witness:
    """``X_i = (X - s) 1_{A_i} + y_i`` with the sets made crisp by splitting atoms."""
    refined, owner = partition_refinement(space, sets)
    xv = lift(refined, values_of(X, space))
    alloc = tuple(np.where(owner == i, xv - s, 0.0) + y[i] for i in range(len(sets)))
    return Witness(refined, alloc, tuple(float(t) for t in y), tuple(sets))


def agent_values(witness: Witness, agents: Sequence[MeasureSpec]) -> list[float]:
    sp = witness.space
    return [
        float(batch(a, np.asarray(x)[None, :], effective_weights(sp, a))[0])
        for a, x in zip(agents, witness.allocation)
    ]


def check_witness(
    result: InfConvResult, agents: Sequence[MeasureSpec] | None, X, space: FiniteSpace,
    tol: float = WITNESS_TOL,
) -> tuple[bool, str]:
    """Sum and value checks for a reported allocation."""
    agents = result.agents or agents
    w = result.witness
    if w is None:
        return True, "no witness"
    total = values_of(X, space) if w.space is space else lift(w.space, values_of(X, space))
    gap = float(np.max(np.abs(np.sum(w.allocation, axis=0) - total)))
    if gap > tol:
        return False, f"allocation misses X by {gap:.3g}"
    vals = agent_values(w, agents)
    tot = sum(vals)
    if result.value == NEG_INF or not math.isfinite(tot) or abs(tot - result.value) > tol:
        return False, f"allocation evaluates to {tot!r}, reported {result.value!r}"
    return True, "ok"


def lex_argmin(values: np.ndarray) -> int:
    """First index of the minimum (ties go to the earliest candidate)."""
    return int(np.argmin(values))


def descent_certificate(kind: str, probes: Sequence[tuple[float, float]], **extra) -> dict:
    cert = {"kind": kind, "probes": [{"scale": m, "objective": o} for m, o in probes]}
    cert.update(extra)
    return cert


def is_descending(probes: Sequence[tuple[float, float]], tol: float = 1e-9) -> bool:
    return all(b[1] < a[1] - tol for a, b in zip(probes, probes[1:]))
