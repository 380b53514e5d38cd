"""Local search for Pareto improvements of an allocation."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from ..prob_core import FiniteSpace, values_of
from ..risk_measures import MeasureSpec, batch, effective_weights
from .result import InfConvError

STEPS = (0.25, 1.0, 4.0)
IMPROVE_TOL = 1e-9


def _values(space: FiniteSpace, agents: Sequence[MeasureSpec], alloc: np.ndarray) -> np.ndarray:
    return np.array([
        float(batch(a, alloc[i][None, :], effective_weights(space, a))[0]) for i, a in enumerate(agents)
    ])


def transfers(alloc: np.ndarray, scale: float):
    """Constant transfers between two agents, then single-atom moves including whole positions."""
    n, K = alloc.shape
    steps = sorted(set(STEPS) | {s * scale for s in STEPS})
    for i, j in itertools.permutations(range(n), 2):
        for d in steps:
            new = alloc.copy()
            new[i] -= d
            new[j] += d
            yield new
    for i, j in itertools.permutations(range(n), 2):
        for k in range(K):
            for d in steps + [float(alloc[i, k])]:
                if d == 0.0:
                    continue
                new = alloc.copy()
                new[i, k] -= d
                new[j, k] += d
                yield new


def pareto_check(
    space: FiniteSpace, agents: Sequence[MeasureSpec], X, allocation: Sequence, tol: float = 1e-9
) -> tuple[bool, np.ndarray | None]:
    """``(True, None)`` if no perturbation helps, else ``(False, better allocation)``.

    An improvement leaves nobody worse off and makes someone strictly better off.
    """
    alloc = np.array([values_of(a, space) for a in allocation], dtype=float)
    x = values_of(X, space)
    gap = float(np.max(np.abs(alloc.sum(axis=0) - x)))
    if gap > tol:
        raise InfConvError(f"allocation misses X by {gap:.3g}")
    base = _values(space, agents, alloc)
    scale = float(np.max(np.abs(alloc))) if alloc.size else 1.0
    scale = max(scale, 1.0)
    for new in transfers(alloc, scale):
        vals = _values(space, agents, new)
        if np.all(vals <= base + IMPROVE_TOL) and np.any(vals < base - IMPROVE_TOL):
            return False, new
    return True, None


__all__ = ["pareto_check", "transfers"]
