"""Lambda-VaR agents sharing one belief, or beliefs conditioned on events.

With a common belief the inf-convolution is the Lambda-VaR of the
sup-convolution of the Lambda functions.  Optimal sets are consecutive
slices of the uniform transform of ``X``, largest losses first.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from ..lambda_fn import Aggregate, StepLambda, lambda_chain, lambda_diamond, lambda_star, split_sum
from ..prob_core import (
    EventSet,
    FiniteSpace,
    conditional_measure,
    uniform_transform,
    values_of,
)
from ..risk_measures import MeasureSpec, lambda_var, var
from .general import lvar_agents
from .result import (
    NEG_INF,
    InapplicableError,
    InfConvError,
    InfConvResult,
    Witness,
    agent_values,
    allocation_from_sets,
    descent_certificate,
    is_descending,
    probe_scale,
)


def _shared_belief(agents: Sequence[MeasureSpec], p_id: str) -> None:
    for i, a in enumerate(agents):
        if a.belief != p_id:
            raise InapplicableError(f"agent {i + 1} holds belief {a.belief!r}, not {p_id!r}")


def stacked_sets(space: FiniteSpace, q_id: str, X, masses: Sequence[float], within: EventSet | None = None):
    """Consecutive slices of the uniform transform of ``X`` under ``q_id``.

    The first agent gets the top slice of mass ``masses[0]``, the next one the
    slice below it and so on; the last agent gets whatever is left.
    """
    order = uniform_transform(space, q_id, X)
    sets, top = [], 1.0
    for m in masses[:-1]:
        lo = max(top - m, 0.0)
        sets.append(order.interval_event(lo, top))
        top = lo
    sets.append(order.interval_event(-1.0, top))
    if within is not None:
        sets = [EventSet(s.membership * within.membership) for s in sets]
    return sets


def _probe(space, agents, X, build) -> dict:
    """Evaluate the allocations ``build(scale)`` at two probe scales."""
    probes = []
    for scale in build.scales:
        wit = build(scale)
        probes.append((scale, float(sum(agent_values(wit, agents)))))
    return descent_certificate("descent", probes, descending=is_descending(probes))


class _AggregateProbe:
    """Allocations of the aggregate route at levels far below every atom."""

    def __init__(self, space, X, agg: Aggregate, sets_for):
        self.space, self.X, self.agg, self.sets_for = space, X, agg, sets_for
        v = values_of(X, space)
        self.anchor = min([float(v.min())] + list(agg.function.breakpoints)) - 1.0
        M = probe_scale(v, agg.components)
        self.scales = (M, 4 * M)

    def __call__(self, scale):
        x = self.anchor - scale
        y = self.agg.decompose(x)
        return allocation_from_sets(self.space, self.X, x, y, self.sets_for(y))


def infconv_homogeneous(space: FiniteSpace, p_id: str, agents: Sequence[MeasureSpec], X) -> InfConvResult:
    _shared_belief(agents, p_id)
    _, Ls = lvar_agents(space, agents)
    v = values_of(X, space)
    if len(Ls) == 1:
        val = lambda_var(space, p_id, v, Ls[0])
        if val == NEG_INF:
            raise InfConvError("a single Lambda-VaR agent is bounded once Lambda < 1")
        wit = Witness(space, (v.copy(),), (val,), (EventSet.full(space.n),))
        return InfConvResult(val, "homogeneous", wit, {"x_star": val})
    agg = lambda_star(Ls)
    x = lambda_var(space, p_id, v, agg.function)
    diag = {"right_continuous_at_x": agg.right_continuous, "attained": agg.attained}

    def sets_for(y):
        return stacked_sets(space, p_id, v, [L(t) for L, t in zip(Ls, y)])

    if x == NEG_INF:
        cert = _probe(space, agents, v, _AggregateProbe(space, v, agg, sets_for))
        return InfConvResult(NEG_INF, "homogeneous", None, {"aggregate": agg.function}, diag, cert)
    y = agg.decompose(x)
    wit = allocation_from_sets(space, v, x, y, sets_for(y))
    params = {"x_star": x, "y_star": list(y), "aggregate": agg.function}
    return InfConvResult(x, "homogeneous", wit, params, diag)


def infconv_chain(space: FiniteSpace, p_id: str, agents: Sequence[MeasureSpec], X) -> InfConvResult:
    """Minimise over prefix points ``y_1, ..., y_{n-1}`` of the chained Lambda-VaR.

    Within a product of pieces for the increments ``y_i - y_{i-1}`` the
    objective depends on the last prefix point ``t`` only.  Between
    consecutive points ``v_k - b`` (atom value minus a breakpoint of the last
    Lambda) the objective is either constant or equal to ``t`` plus a
    constant, and those stretches are open on the left.  Each stretch is
    probed at its left end and at two interior points; a slope of one means
    the infimum is the limit at the left end.
    """
    _shared_belief(agents, p_id)
    _, Ls = lvar_agents(space, agents)
    v = values_of(X, space)
    n = len(Ls)
    if n == 1:
        r = infconv_homogeneous(space, p_id, agents, X)
        r.method = "chain"
        return r
    last = Ls[-1]
    shifts = sorted({float(a - b) for a in np.unique(v) for b in last.breakpoints})
    M = probe_scale(v, Ls)
    pieces = [L.pieces() for L in Ls[:-1]]

    def G(cell, t):
        d = split_sum([pieces[i][cell[i]][0] for i in range(n - 1)],
                      [pieces[i][cell[i]][1] for i in range(n - 1)], t)
        prefix = [float(p) for p in np.cumsum(d)]
        return lambda_var(space, p_id, v, lambda_chain(Ls, prefix)), prefix

    runs = {}
    for mult in (1.0, 4.0):
        best = (math.inf, None)
        for cell in itertools.product(*[range(len(p)) for p in pieces]):
            lo = sum(pieces[i][cell[i]][0] for i in range(n - 1))
            hi = sum(pieces[i][cell[i]][1] for i in range(n - 1))
            pts = [t for t in shifts if lo < t < hi]
            if math.isfinite(lo):
                pts = [lo] + pts
            else:
                ref = min(pts + ([hi] if math.isfinite(hi) else []) + [float(v.min())])
                pts = [ref - 1.0 - mult * M] + pts
            ends = pts[1:] + [hi]
            for p, q in zip(pts, ends):
                val, prefix = G(cell, p)
                if val < best[0]:
                    best = (val, prefix)
                width = (q - p) if math.isfinite(q) else 3.0
                (g1, pre1), (g2, _) = G(cell, p + width / 3), G(cell, p + 2 * width / 3)
                lim = g1 if abs(g2 - g1) <= 1e-12 or g1 == NEG_INF else g1 - width / 3
                if lim < best[0] - 1e-12:
                    best = (lim, pre1 if lim == g1 else None)
        runs[mult] = best
    (v1, pre1), (v4, _) = runs[1.0], runs[4.0]
    if v1 == NEG_INF:
        # the chained Lambda reaches one on its leftmost piece
        cert = {"kind": "level_one", "y_prefix": pre1, "chained": lambda_chain(Ls, pre1)}
        return InfConvResult(NEG_INF, "chain", None, {"y_prefix": pre1}, {}, cert)
    if v4 < v1 - 1e-9:
        cert = descent_certificate("descent", [(M, v1), (4 * M, v4)], descending=True)
        return InfConvResult(NEG_INF, "chain", None, {}, {}, cert)
    x = v1
    if pre1 is not None:
        y = list(np.diff(np.concatenate([[0.0], pre1]))) + [x - pre1[-1]]
    else:
        # infimum approached but not reached along the prefix; realise it
        # through a decomposition of the aggregate instead
        y = list(lambda_star(Ls).decompose(x))
    masses = [L(t) for L, t in zip(Ls, y)]
    sets = stacked_sets(space, p_id, v, masses)
    wit = allocation_from_sets(space, v, x, y, sets)
    return InfConvResult(x, "chain", wit, {"x_star": x, "y_prefix": pre1, "y_star": y})


# ---------------------------------------------------------------- conditional beliefs


def _check_conditional(space: FiniteSpace, p_id: str, Bs: Sequence[EventSet], agents) -> list[float]:
    if len(Bs) != len(agents):
        raise InfConvError("one conditioning event per agent")
    P = space.weights(p_id)
    masses = []
    for i, (B, a) in enumerate(zip(Bs, agents)):
        if not B.is_crisp:
            raise InfConvError(f"conditioning event {i + 1} must be crisp")
        pb = float(B.membership @ P)
        if pb <= 0:
            raise InfConvError(f"conditioning event {i + 1} has zero probability")
        expect = B.membership * P / pb
        got = space.weights(a.belief)
        if not np.allclose(expect, got, atol=1e-9):
            raise InfConvError(f"belief {a.belief!r} is not P(. | B_{i + 1})")
        masses.append(pb)
    return masses


def _intersection(Bs: Sequence[EventSet]) -> EventSet:
    m = np.ones(len(Bs[0]))
    for B in Bs:
        m = m * B.membership
    return EventSet(m)


def _outside_owner(Bs: Sequence[EventSet], inside: EventSet) -> list[EventSet]:
    """Atoms off the common event go to the first agent whose event misses them."""
    n, K = len(Bs), len(inside)
    mem = np.zeros((n, K))
    for k in range(K):
        if inside.membership[k] > 0.5:
            continue
        i = next(j for j in range(n) if Bs[j].membership[k] < 0.5)
        mem[i, k] = 1.0
    return [EventSet(m) for m in mem]


def _singular_result(space, p_id, Bs, agents, X, method) -> InfConvResult:
    v = values_of(X, space)
    inside = _intersection(Bs)
    sets = _outside_owner(Bs, inside)
    M = probe_scale(v, [a.lam for a in agents if a.lam is not None])
    probes = []
    n = len(agents)
    for scale in (M, 4 * M):
        s = float(v.min()) - 1.0 - scale
        wit = allocation_from_sets(space, v, s, [s / n] * n, sets)
        probes.append((scale, float(sum(agent_values(wit, agents)))))
    cert = descent_certificate(
        "singular", probes, descending=is_descending(probes), intersection_mass=0.0,
        sets=[s.membership.tolist() for s in sets],
    )
    return InfConvResult(NEG_INF, method, None, {}, {"intersection_mass": 0.0}, cert)


def infconv_conditional(
    space: FiniteSpace, p_id: str, Bs: Sequence[EventSet], agents: Sequence[MeasureSpec], X
) -> InfConvResult:
    pB = _check_conditional(space, p_id, Bs, agents)
    _, Ls = lvar_agents(space, agents)
    v = values_of(X, space)
    inside = _intersection(Bs)
    base = float(inside.membership @ space.weights(p_id))
    if base <= 0:
        return _singular_result(space, p_id, Bs, agents, v, "conditional")
    cspace, q_id = conditional_measure(space, p_id, inside, new_id=f"{p_id}|common")
    agg = lambda_diamond(Ls, pB, base)
    x = lambda_var(cspace, q_id, v, agg.function)
    outside = _outside_owner(Bs, inside)

    def sets_for(y):
        masses = [pb * L(t) / base for pb, L, t in zip(pB, Ls, y)]
        core = stacked_sets(cspace, q_id, v, masses, within=inside)
        return [EventSet(np.clip(a.membership + b.membership, 0, 1)) for a, b in zip(core, outside)]

    diag = {"intersection_mass": base, "right_continuous_at_x": agg.right_continuous}
    if x == NEG_INF:
        cert = _probe(space, agents, v, _AggregateProbe(space, v, agg, sets_for))
        return InfConvResult(NEG_INF, "conditional", None, {"aggregate": agg.function}, diag, cert)
    y = agg.decompose(x)
    wit = allocation_from_sets(space, v, x, y, sets_for(y))
    params = {"x_star": x, "y_star": list(y), "aggregate": agg.function}
    return InfConvResult(x, "conditional", wit, params, diag)


def infconv_var_conditional(
    space: FiniteSpace, p_id: str, Bs: Sequence[EventSet], alphas: Sequence[float], X
) -> InfConvResult:
    """Constant tolerances: VaR of ``X`` at ``sum alpha_i P(B_i) / P(common)`` given the common event."""
    P = space.weights(p_id)
    v = values_of(X, space)
    inside = _intersection(Bs)
    base = float(inside.membership @ P)
    pB = [float(B.membership @ P) for B in Bs]
    level = sum(a * pb for a, pb in zip(alphas, pB)) / base if base > 0 else math.inf
    params = {"level": min(level, 1.0), "intersection_mass": base}
    agents, sp = [], space
    for i, (B, a) in enumerate(zip(Bs, alphas)):
        sp, qid = conditional_measure(sp, p_id, B, new_id=f"{p_id}|B{i + 1}")
        agents.append(MeasureSpec("lambda_var", qid, lam=StepLambda.constant(a)))
    if base <= 0:
        r = _singular_result(sp, p_id, Bs, agents, v, "var_conditional")
        r.params.update(params)
        r.agents = tuple(agents)
        return r
    if level >= 1.0 - 1e-12:
        r = infconv_conditional(sp, p_id, Bs, agents, v)
        r.method = "var_conditional"
        r.params.update(params)
        r.agents = tuple(agents)
        if r.value != NEG_INF:
            raise InfConvError("closed form and aggregate route disagree on the level")
        return r
    cspace, q_id = conditional_measure(sp, p_id, inside, new_id=f"{p_id}|common")
    val = var(cspace, q_id, v, level)
    r = infconv_conditional(sp, p_id, Bs, agents, v)
    r.method = "var_conditional"
    r.params.update(params)
    r.agents = tuple(agents)
    r.diagnostics["aggregate_value"] = r.value
    r.value = val
    return r
