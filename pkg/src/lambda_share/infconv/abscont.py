"""Two Lambda-VaR agents whose second belief has a density w.r.t. the first.

For a level ``x`` the first agent can keep a ``Lambda_1(y)`` share of the
tail ``{X > x}`` under its own belief; the rest has to go to the second
agent, who is charged least when that rest sits where the density ``eta``
is smallest.  ``g_x(t)`` is the second agent's mass of the cheapest part of
the tail with first-belief mass ``t``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..lambda_fn import StepLambda, check_bounds, split_sum
from ..prob_core import (
    EPS,
    FiniteSpace,
    ProbabilityError,
    cdf,
    radon_nikodym,
    tail_event,
    values_of,
)
from ..risk_measures import MeasureSpec
from .result import (
    NEG_INF,
    InfConvResult,
    agent_values,
    allocation_from_sets,
    descent_certificate,
    is_descending,
    probe_scale,
)

FEAS_TOL = 1e-10


def g_curve(space: FiniteSpace, q1_id: str, eta, X, x: float, t: float) -> float:
    """``E_1[eta; tail part of mass t]`` with the tail filled in ascending ``eta``."""
    w1 = space.weights(q1_id)
    v = values_of(X, space)
    top = float(w1[v > x].sum())
    if t < -EPS or t > top + EPS:
        raise ProbabilityError(f"level {t!r} outside [0, {top!r}]")
    A = tail_event(space, q1_id, v, x, min(max(t, 0.0), top), eta)
    return float(np.sum(A.membership * w1 * values_of(eta, space)))


def quantile_integral(space: FiniteSpace, q_id: str, Y, a: float, b: float) -> float:
    """``int_a^b F_Y^{-1}(s) ds`` for the left quantile under ``q_id``."""
    w = space.weights(q_id)
    v = values_of(Y, space)
    order = np.argsort(v, kind="stable")
    edges = np.concatenate([[0.0], np.cumsum(w[order])])
    lo, hi = edges[:-1], edges[1:]
    overlap = np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)
    return float(np.sum(v[order] * overlap))


def g_comonotone(space, q1_id, eta, X, x, t) -> float:
    F = cdf(space, q1_id, X, x)
    return quantile_integral(space, q1_id, eta, F, F + t)


def g_countermonotone(space, q1_id, eta, X, x, t) -> float:
    return quantile_integral(space, q1_id, eta, 0.0, t)


def g_independent(space, q1_id, eta, X, x, t) -> float:
    S = 1.0 - cdf(space, q1_id, X, x)
    if S <= 0:
        return 0.0
    return S * quantile_integral(space, q1_id, eta, 0.0, t / S)


def infconv_abscont(
    space: FiniteSpace, q1_id: str, q2_id: str, L1: StepLambda, L2: StepLambda, X
) -> InfConvResult:
    check_bounds(L1, "Lambda_1")
    check_bounds(L2, "Lambda_2")
    eta = radon_nikodym(space, q2_id, q1_id)
    v = values_of(X, space)
    w1 = space.weights(q1_id)
    p1, p2 = L1.pieces(), L2.pieces()
    u = np.unique(v)
    left = np.concatenate([[-math.inf], u])
    right = np.concatenate([u, [math.inf]])
    best = (math.inf, None)
    for (j1, (l1, h1, c1)), (j2, (l2, h2, c2)) in itertools.product(enumerate(p1), enumerate(p2)):
        lo, hi = l1 + l2, h1 + h2
        for a, b in zip(left, right):
            start = max(lo, a)
            if not start < min(hi, b) or start >= best[0]:
                continue
            # any level inside (a, b) cuts the same tail
            probe = a if math.isfinite(a) else float(u[0]) - 1.0
            tail = float(w1[v > probe].sum())
            need = max(tail - c1, 0.0)
            if g_curve(space, q1_id, eta, v, probe, need) <= c2 + FEAS_TOL:
                best = (float(start), (j1, j2, probe, need))
    agents = [MeasureSpec("lambda_var", q1_id, lam=L1), MeasureSpec("lambda_var", q2_id, lam=L2)]
    x, arg = best
    j1, j2, probe, need = arg
    diag = {"eta": eta.values.tolist(), "decided_by": "tail curve"}
    if x == NEG_INF:
        M = probe_scale(v, [L1, L2])
        probes = []
        for scale in (M, 4 * M):
            s = float(v.min()) - 1.0 - scale
            y1, y2 = split_sum([p1[j1][0], p2[j2][0]], [p1[j1][1], p2[j2][1]], s)
            wit = _allocation(space, q1_id, eta, v, s, y1, need)
            probes.append((scale, float(sum(agent_values(wit, agents)))))
        cert = descent_certificate("descent", probes, descending=is_descending(probes))
        res = InfConvResult(NEG_INF, "abscont", None, {}, diag, cert)
        res.agents = tuple(agents)
        return res
    y1, y2 = split_sum([p1[j1][0], p2[j2][0]], [p1[j1][1], p2[j2][1]], x)
    tail = float(w1[v > x].sum())
    mass = max(tail - L1(y1), 0.0)
    wit = _allocation(space, q1_id, eta, v, x, y1, mass)
    res = InfConvResult(x, "abscont", wit, {"x_star": x, "y_star": y1, "mass": mass}, diag)
    res.agents = tuple(agents)
    return res


def _allocation(space, q1_id, eta, v, x, y, mass):
    """First agent keeps ``(X - x) 1_{A^c} + y``; the second takes ``(X - x) 1_A + x - y``."""
    A = tail_event(space, q1_id, v, x, mass, eta)
    keep = A.complement()
    return allocation_from_sets(space, v, x, (y, x - y), (keep, A))
