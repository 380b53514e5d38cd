"""Inf-convolution of Lambda-VaR agents with arbitrary beliefs.

The optimum is the least total level ``s = y_1 + ... + y_n`` for which the
tail ``{X > s}`` can be shared out so that agent ``i`` carries at most
``Lambda_i(y_i)`` of it under its own belief.  Each ``y_i`` only matters
through the piece of ``Lambda_i`` it lies in, and ``s`` only through the
tail it cuts, so the search runs over products of pieces ("cells").

Whether a tail can be shared under capacities ``c`` is a transportation
feasibility question.  It is decided through its dual: sharing fails iff
some ``pi >= 0`` with ``sum(pi) = 1`` has
``sum_k min_i pi_i w_ik > pi . c``.  The left side is concave and piecewise
linear in ``pi``, so it suffices to test the vertices of its linearity
regions, which depend on the tail only and are cached per tail.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from ..lambda_fn import StepLambda, check_bounds, split_sum
from ..prob_core import EventSet, FiniteSpace, values_of
from ..risk_measures import MeasureSpec, batch, effective_weights
from .result import (
    NEG_INF,
    CapExceededError,
    InfConvError,
    InfConvResult,
    allocation_from_sets,
    descent_certificate,
    is_descending,
    probe_scale,
)

DEFAULT_CAP = 10**7
FEAS_TOL = 1e-10


def lvar_agents(space: FiniteSpace, agents: Sequence[MeasureSpec]) -> tuple[np.ndarray, list[StepLambda]]:
    """Belief matrix (agents x atoms) and Lambda functions of Lambda-VaR agents."""
    W, Ls = [], []
    for i, a in enumerate(agents):
        if a.kind != "lambda_var":
            raise InfConvError(f"agent {i + 1} is not a Lambda-VaR agent ({a.kind})")
        check_bounds(a.lam, f"Lambda_{i + 1}")
        W.append(effective_weights(space, a))
        Ls.append(a.lam)
    return np.array(W), Ls


# ---------------------------------------------------------------- tail sharing


def dual_vertices(Wt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices ``pi`` of the linearity regions and ``sum_k min_i pi_i w_ik`` at each."""
    n, K = Wt.shape
    if n == 1:
        V = np.ones((1, 1))
        return V, np.array([Wt.sum()])
    planes = [np.eye(n)[i] for i in range(n)]
    for k in range(K):
        for i, j in itertools.combinations(range(n), 2):
            if Wt[i, k] == 0 and Wt[j, k] == 0:
                continue
            a = np.zeros(n)
            a[i], a[j] = Wt[i, k], -Wt[j, k]
            planes.append(a / np.abs(a).max())
    P = np.unique(np.round(np.array(planes), 15), axis=0)
    combos = np.array(list(itertools.combinations(range(len(P)), n - 1)))
    A = np.concatenate([P[combos], np.broadcast_to(np.ones(n), (len(combos), 1, n))], axis=1)
    det = np.linalg.det(A)
    ok = np.abs(det) > 1e-12
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pis = np.linalg.solve(A[ok], np.broadcast_to(rhs, (int(ok.sum()), n))[..., None])[..., 0]
    pis = pis[(pis >= -1e-12).all(axis=1)]
    pis = np.clip(pis, 0.0, None)
    pis = pis / pis.sum(axis=1, keepdims=True)
    pis = np.unique(np.round(pis, 14), axis=0)
    h = np.min(pis[:, :, None] * Wt[None, :, :], axis=1).sum(axis=1)
    return pis, h


class TailSharing:
    """Cached feasibility tests for sharing tails of one belief matrix."""

    def __init__(self, W: np.ndarray):
        self.W = W
        self._cache: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}

    def _dual(self, tail: np.ndarray):
        key = np.packbits(tail).tobytes() + bytes([tail.size % 256])
        if key not in self._cache:
            self._cache[key] = dual_vertices(self.W[:, tail])
        return self._cache[key]

    def feasible(self, tail: np.ndarray, caps: np.ndarray) -> np.ndarray:
        """Row-wise verdict for a batch of capacity vectors ``caps`` (m x n)."""
        caps = np.atleast_2d(caps)
        if not tail.any():
            return np.ones(caps.shape[0], dtype=bool)
        V, h = self._dual(tail)
        gap = h[:, None] - V @ caps.T
        return gap.max(axis=0) <= FEAS_TOL


def share_tail(W: np.ndarray, tail: np.ndarray, caps: Sequence[float]) -> np.ndarray:
    """Fractional owner matrix (agents x atoms) of the tail within the capacities.

    Two agents: the first takes tail atoms in increasing order of how much of
    its capacity they cost per unit of the second agent's mass.  More agents
    go through a linear program.
    """
    n, K = W.shape
    x = np.zeros((n, K))
    idx = np.flatnonzero(tail)
    if idx.size == 0:
        return x
    if n == 1:
        x[0, idx] = 1.0
        return x
    if n == 2:
        w1, w2 = W[0, idx], W[1, idx]
        ratio = np.where(w2 > 0, w1 / np.where(w2 > 0, w2, 1.0), np.inf)
        ratio = np.where(w1 == 0, -1.0, ratio)
        room = float(caps[0])
        for j in np.argsort(ratio, kind="stable"):
            k = idx[j]
            if W[0, k] == 0:
                x[0, k] = 1.0
            elif room > 0 and W[1, k] > 0:
                take = min(1.0, room / W[0, k])
                x[0, k] = take
                room -= take * W[0, k]
            x[1, k] = 1.0 - x[0, k]
        return x
    m = idx.size
    # variables x[i, j] for j over tail atoms, row-major
    A_eq = np.zeros((m, n * m))
    for j in range(m):
        A_eq[j, j::m] = 1.0
    A_ub = np.zeros((n, n * m))
    for i in range(n):
        A_ub[i, i * m:(i + 1) * m] = W[i, idx]
    res = linprog(
        np.zeros(n * m), A_ub=A_ub, b_ub=np.asarray(caps, dtype=float), A_eq=A_eq,
        b_eq=np.ones(m), bounds=(0, 1), method="highs-ds",
    )
    if res.status != 0:
        raise InfConvError("tail cannot be shared within the capacities")
    sol = np.clip(res.x.reshape(n, m), 0.0, 1.0)
    sol[sol < 1e-13] = 0.0
    sol /= sol.sum(axis=0, keepdims=True)
    x[:, idx] = sol
    return x


def sets_from_owner(owner: np.ndarray, tail: np.ndarray) -> tuple[EventSet, ...]:
    """Tail shares as events; everything off the tail goes to the last agent."""
    mem = owner.copy()
    mem[-1, ~tail] = 1.0
    mem[:-1, ~tail] = 0.0
    return tuple(EventSet(m) for m in mem)


# ---------------------------------------------------------------- cells


def _cells(Ls: Sequence[StepLambda]):
    pieces = [L.pieces() for L in Ls]
    combos = list(itertools.product(*[range(len(p)) for p in pieces]))
    lo = np.array([sum(pieces[i][c[i]][0] for i in range(len(Ls))) for c in combos])
    hi = np.array([sum(pieces[i][c[i]][1] for i in range(len(Ls))) for c in combos])
    caps = np.array([[pieces[i][c[i]][2] for i in range(len(Ls))] for c in combos])
    return pieces, combos, lo, hi, caps


def _value_pieces(v: np.ndarray):
    """Intervals of the total level with a constant tail ``{X > s}``."""
    u = np.unique(v)
    left = np.concatenate([[-math.inf], u])
    right = np.concatenate([u, [math.inf]])
    tails = [v > a for a in left]
    return left, right, tails


def gamma_general(
    space: FiniteSpace, agents: Sequence[MeasureSpec], X, cap: int = DEFAULT_CAP
) -> InfConvResult:
    W, Ls = lvar_agents(space, agents)
    v = values_of(X, space)
    n = len(Ls)
    size = math.prod(len(L.values) for L in Ls) * (np.unique(v).size + 1)
    if size > cap:
        raise CapExceededError(
            f"{size} cells exceed the cap of {cap}; use a specialised method"
        )
    pieces, combos, lo, hi, caps = _cells(Ls)
    left, right, tails = _value_pieces(v)
    share = TailSharing(W)
    best = (math.inf, -1, -1)
    for j, (a, b, tail) in enumerate(zip(left, right, tails)):
        start = np.maximum(lo, a)
        open_ = start < np.minimum(hi, b)
        if not open_.any():
            continue
        cand = np.flatnonzero(open_)
        cand = cand[start[cand] < best[0]]
        if cand.size == 0:
            continue
        ok = share.feasible(tail, caps[cand])
        if ok.any():
            c = cand[ok][np.argmin(start[cand[ok]])]
            if start[c] < best[0]:
                best = (float(start[c]), int(c), j)
    s, c, j = best
    diag = {"cells": len(combos), "tails": len(left), "decided_by": "cell enumeration"}
    if c < 0:
        raise InfConvError("no feasible cell; the Lambda bounds were not respected")
    cell = combos[c]
    params = {"cell": list(cell)}
    if s == NEG_INF:
        cert = _descent(space, W, Ls, v, pieces, cell, caps[c], agents)
        return InfConvResult(NEG_INF, "general", None, params, diag, cert)
    y = split_sum([pieces[i][cell[i]][0] for i in range(n)], [pieces[i][cell[i]][1] for i in range(n)], s)
    owner = share_tail(W, tails[j], caps[c])
    sets = sets_from_owner(owner, tails[j])
    wit = allocation_from_sets(space, v, s, y, sets)
    params.update({"s_star": s, "y_star": list(y)})
    return InfConvResult(s, "general", wit, params, diag)


def _descent(space, W, Ls, v, pieces, cell, caps, agents) -> dict:
    """Two probe allocations whose total value keeps falling."""
    n = len(Ls)
    full = np.ones(v.size, dtype=bool)
    owner = share_tail(W, full, caps)
    sets = sets_from_owner(owner, full)
    lows = [pieces[i][cell[i]][0] for i in range(n)]
    highs = [pieces[i][cell[i]][1] for i in range(n)]
    M = probe_scale(v, Ls)
    finite_part = sum(l for l in lows if math.isfinite(l))
    probes = []
    for scale in (M, 4 * M):
        s = min(float(v.min()) - 1.0, finite_part) - scale
        y = split_sum(lows, highs, s)
        wit = allocation_from_sets(space, v, s, y, sets)
        tot = sum(
            float(batch(a, x[None, :], effective_weights(wit.space, a))[0])
            for a, x in zip(agents, wit.allocation)
        )
        probes.append((scale, tot))
    return descent_certificate(
        "descent", probes, descending=is_descending(probes), cell=list(cell),
        sets=[s.membership.tolist() for s in sets],
    )


# ---------------------------------------------------------------- finiteness tests


def min_max_ratio(W: np.ndarray, caps: Sequence[float]) -> tuple[float, np.ndarray]:
    """``min`` over fractional partitions of ``max_i Q_i(A_i) / caps_i`` by linear programming."""
    n, K = W.shape
    caps = np.asarray(caps, dtype=float)
    # variables: x[i, k] row-major, then r
    c = np.zeros(n * K + 1)
    c[-1] = 1.0
    A_ub = np.zeros((n, n * K + 1))
    for i in range(n):
        A_ub[i, i * K:(i + 1) * K] = W[i] / caps[i]
        A_ub[i, -1] = -1.0
    A_eq = np.zeros((K, n * K + 1))
    for k in range(K):
        A_eq[k, k:n * K:K] = 1.0
    bounds = [(0, 1)] * (n * K) + [(0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=np.ones(K), bounds=bounds, method="highs")
    if res.status != 0:
        raise InfConvError(f"ratio program failed: {res.message}")
    return float(res.x[-1]), res.x[:-1].reshape(n, K)


def _flags(neg: bool, fin: bool, owner: np.ndarray, rule: str, ratio: float) -> dict:
    return {
        "neg_inf_certain": bool(neg),
        "finite_certain": bool(fin),
        "witness_partition": [EventSet(np.clip(m, 0, 1)) for m in owner],
        "decided_by": rule if (neg or fin) else "indeterminate",
        "ratio": ratio,
    }


RATIO_TOL = 1e-9


def finiteness_general(space: FiniteSpace, agents: Sequence[MeasureSpec]) -> dict:
    W, Ls = lvar_agents(space, agents)
    lo = [L.lam_minus for L in Ls]
    hi = [L.lam_plus for L in Ls]
    r_lo, part_lo = min_max_ratio(W, lo)
    if r_lo <= 1.0 + RATIO_TOL:
        return _flags(True, False, part_lo, "ratio to the lower bounds is at most one", r_lo)
    r_hi, part_hi = min_max_ratio(W, hi)
    fin = r_hi > 1.0 + 1e-7
    return _flags(False, fin, part_hi, "ratio to the upper bounds exceeds one", r_hi)


def finiteness_monotone(space: FiniteSpace, agents: Sequence[MeasureSpec], direction: str) -> dict:
    W, Ls = lvar_agents(space, agents)
    hi = [L.lam_plus for L in Ls]
    if direction == "decreasing":
        if not all(L.is_decreasing for L in Ls):
            raise InfConvError("every Lambda must be decreasing")
        r, part = min_max_ratio(W, hi)
        if r < 1.0 - RATIO_TOL:
            return _flags(True, False, part, "ratio to the upper bounds is below one", r)
        return _flags(False, r > 1.0 + 1e-7, part, "ratio to the upper bounds exceeds one", r)
    if direction == "increasing":
        if not all(L.is_increasing for L in Ls):
            raise InfConvError("every Lambda must be increasing")
        best, best_part = math.inf, None
        for i, L in enumerate(Ls):
            caps = list(hi)
            caps[i] = L.lam_minus
            r, part = min_max_ratio(W, caps)
            if r < best:
                best, best_part = r, part
        if best < 1.0 - RATIO_TOL:
            return _flags(True, False, best_part, "mixed-bound ratio is below one", best)
        return _flags(False, best > 1.0 + 1e-7, best_part, "mixed-bound ratio exceeds one", best)
    raise InfConvError(f"direction must be 'increasing' or 'decreasing', got {direction!r}")
