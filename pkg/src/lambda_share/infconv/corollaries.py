"""Closed and semi-closed forms for one Lambda-VaR agent against a named functional.

Conditional beliefs ``Q_i = P(. | B_i)``: distortions, expected utility and
Lambda-VaR+.  Absolutely continuous beliefs with density ``eta = dQ2/dQ1``:
ES and expected utility.  Each routine evaluates its own formula; the
allocations attached to the conditional forms use the explicit set ``A_x``.
"""

from __future__ import annotations

import math

import numpy as np

from ..lambda_fn import DistortionFunction, StepLambda, UtilityFunction, check_bounds, lambda_bar
from ..prob_core import (
    EPS,
    EventSet,
    FiniteSpace,
    conditional_measure,
    radon_nikodym,
    uniform_transform,
    values_of,
)
from ..risk_measures import MeasureSpec, lambda_var_plus
from .abscont import quantile_integral
from .lattice import scan
from .result import NEG_INF, InfConvResult, descent_certificate, probe_scale
from .thone import SetObjective, conditional_set, conditional_space, set_witness


class _Conditional:
    """Masses and the consensus law ``Q = P(. | B1 B2)`` shared by the three forms."""

    def __init__(self, space, p_id, B1: EventSet, B2: EventSet, L: StepLambda, X):
        check_bounds(L)
        self.space, self.p_id, self.L = space, p_id, L
        self.ext, self.q1, self.q2 = conditional_space(space, p_id, B1, B2)
        self.P = space.weights(p_id)
        self.b1, self.b2 = B1.membership, B2.membership
        self.p1 = float(self.b1 @ self.P)
        self.p2 = float(self.b2 @ self.P)
        self.p12 = float((self.b1 * self.b2) @ self.P)
        self.v = values_of(X, space)
        self.q1_of_b2 = self.p12 / self.p1
        self.lam_plus = L.lam_plus
        inside = (self.b1 * self.b2 > 0.5) & (self.P > 0)
        order = np.argsort(self.v[inside], kind="stable")
        self.xs = self.v[inside][order]
        w = self.P[inside][order] / self.p12 if self.p12 > 0 else np.zeros(0)
        self.cum = np.cumsum(w)

    def beta(self, lam: float) -> float:
        return ((1.0 - lam) * self.p1 - float((self.b1 * (1.0 - self.b2)) @ self.P)) / self.p2

    @property
    def scale(self) -> float:
        """``P(B2) / P(B1 B2)``: converts second-belief mass into consensus mass."""
        return self.p2 / self.p12

    def pieces(self):
        """Quantile pieces of ``X`` under ``Q``: ``(value, F_{j-1}, F_j)``."""
        prev = np.concatenate([[0.0], self.cum[:-1]])
        return zip(self.xs, prev, self.cum)

    def x_at_lam_plus(self) -> float:
        for lo, hi, val in self.L.pieces():
            if val == self.lam_plus:
                if math.isfinite(lo):
                    return lo
                return hi - 1.0 if math.isfinite(hi) else 0.0
        raise AssertionError("a step function attains its maximum")

    def set_at(self, x: float) -> np.ndarray:
        return conditional_set(self.P, self.b1, self.b2, self.v, self.L(x))

    def agents(self, agent2: MeasureSpec):
        return (MeasureSpec("lambda_var", self.q1, lam=self.L), agent2)

    def probes(self, agent2, x, extra=()) -> list[tuple[float, float]]:
        M = probe_scale(self.v, [self.L], extra=tuple(agent2.shift_knots) + tuple(extra))
        obj = SetObjective(self.ext, agent2, self.v, M)
        row = self.set_at(x)[None, :]
        return [(s * M, float(x + obj.rho(x, row, s)[0])) for s in (1.0, 4.0)], obj

    def neg_inf(self, method, agent2, reason: str, x: float | None = None, probes=None,
                **extra) -> InfConvResult:
        x = self.x_at_lam_plus() if x is None else x
        if probes is None:
            probes, _ = self.probes(agent2, x)
        cert = descent_certificate("closed form", probes, reason=reason, x=x,
                                   set=self.set_at(x).tolist(), **extra)
        res = InfConvResult(NEG_INF, method, None, {}, self.diagnostics(), cert)
        res.agents = self.agents(agent2)
        return res

    def diagnostics(self) -> dict:
        return {"q1_of_b2": self.q1_of_b2, "lambda_plus": self.lam_plus,
                "p_b1": self.p1, "p_b2": self.p2, "p_b1b2": self.p12}

    def finish(self, method, agent2, value: float, x: float, attained: bool = True, **params):
        params = dict(params, x_star=x)
        diag = dict(self.diagnostics(), attained=attained)
        wit = None
        if attained:
            _, obj = self.probes(agent2, x)
            y = obj.y_probe(x, 1.0)
            wit = set_witness(self.ext, self.v, x, y, self.set_at(x))
            params["y_star"] = y
        res = InfConvResult(value, method, wit, params, diag)
        res.agents = self.agents(agent2)
        return res


def consensus_distortion_integral(c: _Conditional, beta: float, g: DistortionFunction) -> float:
    """``int_[0, beta) VaR^Q_{1 - scale (beta - t)}(X) dg(t)`` for left-continuous ``g``."""
    total = 0.0
    k = c.scale
    for x, lo_p, hi_p in c.pieces():
        # quantile level s = k (beta - t) lies in (lo_p, hi_p]  <=>  t in [beta - hi_p/k, beta - lo_p/k)
        lo = max(beta - hi_p / k, 0.0)
        hi = min(beta - lo_p / k, beta)
        if hi > lo:
            total += float(x) * (g(hi) - g(lo))
    return total


def cor2_distortion(space, p_id, B1, B2, L: StepLambda, g: DistortionFunction, X) -> InfConvResult:
    c = _Conditional(space, p_id, B1, B2, L, X)
    agent2 = MeasureSpec("distortion", c.q2, g=g)
    if c.p12 <= 0 or c.q1_of_b2 <= c.lam_plus + EPS:
        return c.neg_inf("cor2-distortion", agent2, "Q1(B2) <= lambda_plus")
    beta = c.beta(c.lam_plus)
    if g(beta) < 1.0 - EPS:
        return c.neg_inf("cor2-distortion", agent2, "g(beta) < 1", beta=beta)
    value = consensus_distortion_integral(c, beta, g)
    return c.finish("cor2-distortion", agent2, value, c.x_at_lam_plus(), beta=beta)


def cor2_utility(space, p_id, B1, B2, L: StepLambda, u: UtilityFunction, X) -> InfConvResult:
    c = _Conditional(space, p_id, B1, B2, L, X)
    agent2 = MeasureSpec("expected_utility", c.q2, u=u)
    if c.p12 <= 0 or c.q1_of_b2 <= c.lam_plus + EPS:
        return c.neg_inf("cor2-utility", agent2, "Q1(B2) <= lambda_plus")
    if u.minus_infinity == NEG_INF:
        return c.neg_inf("cor2-utility", agent2, "u(-inf) = -inf")
    k = c.scale
    lows = np.array([lo for _, lo, _ in c.pieces()])
    highs = np.array([hi for _, _, hi in c.pieces()])

    def phi(x):
        b = c.beta(c.L(x))
        width = np.clip(np.minimum(highs, k * b) - lows, 0.0, None)
        body = float(width @ u.eval_many(c.xs - x)) / k
        return np.array([x + (1.0 - b) * u.minus_infinity + body]), np.zeros(1, dtype=bool)

    pts = set(c.L.breakpoints)
    for kink in u.kinks:
        pts.update(float(t) - kink for t in c.v)
    M = probe_scale(c.v, [L], extra=u.kinks)
    found = scan(sorted(pts), phi, M)
    if found.value == NEG_INF:
        return c.neg_inf("cor2-utility", agent2, "descent in x", x=found.x, probes=found.descent["probes"])
    return c.finish("cor2-utility", agent2, found.value, found.x, found.attained, found_at=found.where)


def cor2_lvarplus(space, p_id, B1, B2, L: StepLambda, L1: StepLambda, X) -> InfConvResult:
    c = _Conditional(space, p_id, B1, B2, L, X)
    check_bounds(L1, "Lambda_1")
    agent2 = MeasureSpec("lambda_var_plus", c.q2, lam=L1)
    if c.p12 <= 0 or c.q1_of_b2 <= c.lam_plus + EPS:
        return c.neg_inf("cor2-lvarplus", agent2, "Q1(B2) <= lambda_plus")
    sp, q_id = _consensus(c)

    def phi(x):
        bar = lambda_bar(c.L, L1, x, c.p1, c.p2, c.p12)
        r = lambda_var_plus(sp, q_id, c.v, bar)
        return np.array([r]), np.array([r == NEG_INF])

    pts = set(c.L.breakpoints)
    for b in L1.breakpoints:
        pts.update(float(t) - b for t in c.v)
    pts.update(float(t) for t in c.v)
    M = probe_scale(c.v, [L, L1])
    found = scan(sorted(pts), phi, M)
    if found.value == NEG_INF:
        return c.neg_inf("cor2-lvarplus", agent2, "descent", x=found.x)
    return c.finish("cor2-lvarplus", agent2, found.value, found.x, found.attained, found_at=found.where)


def _consensus(c: _Conditional):
    return conditional_measure(c.space, c.p_id, EventSet(c.b1 * c.b2), f"{c.p_id}|B1B2")


def cor3_es(space: FiniteSpace, q1_id: str, q2_id: str, L: StepLambda, alpha: float, X) -> InfConvResult:
    """``inf_t t + ((1 - lambda+)/alpha) LES_{1 - lambda+}^{Q1}(eta (X - t)_+)``."""
    check_bounds(L)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"ES level {alpha!r} outside (0, 1)")
    eta = radon_nikodym(space, q2_id, q1_id).values
    v = values_of(X, space)
    lp = L.lam_plus
    keep = 1.0 - lp

    def phi(t):
        Y = eta * np.clip(v - t, 0.0, None)
        return np.array([t + quantile_integral(space, q1_id, Y, 0.0, keep) / alpha]), np.zeros(1, dtype=bool)

    pts = set(float(t) for t in v)
    for j in range(v.size):
        for k in range(j + 1, v.size):
            if abs(eta[j] - eta[k]) > EPS:
                pts.add(float((eta[j] * v[j] - eta[k] * v[k]) / (eta[j] - eta[k])))
    M = probe_scale(v, [L], extra=sorted(pts))
    found = scan(sorted(pts), phi, M)
    agents = (MeasureSpec("lambda_var", q1_id, lam=L), MeasureSpec("es", q2_id, alpha=alpha))
    diag = {"eta": eta.tolist(), "lambda_plus": lp, "evaluations": found.evaluations}
    if found.value == NEG_INF:
        cert = descent_certificate("descent", found.descent["probes"], descending=True, parameter="t")
        res = InfConvResult(NEG_INF, "cor3-es", None, {}, diag, cert)
    else:
        res = InfConvResult(found.value, "cor3-es", None, {"t_star": found.x}, diag)
    res.agents = agents
    return res


def cor3_utility(space: FiniteSpace, q1_id: str, q2_id: str, L: StepLambda, u: UtilityFunction, X) -> InfConvResult:
    """The display taken literally: the set kept by the second agent is ``{U_eta < 1 - Lambda(x)}``."""
    check_bounds(L)
    eta = radon_nikodym(space, q2_id, q1_id).values
    v = values_of(X, space)
    w1 = space.weights(q1_id)
    w2 = space.weights(q2_id)
    # ties in eta are broken by X so that eta = 1 recovers the same-belief optimum
    ordering = uniform_transform(space, q1_id, eta, tie_break=v)
    agent2 = MeasureSpec("expected_utility", q2_id, u=u)
    agents = (MeasureSpec("lambda_var", q1_id, lam=L), agent2)

    def low(x):
        return ordering.interval_event(0.0, 1.0 - L(x)).membership

    def phi(x):
        A = low(x)
        top = float((1.0 - A) @ w2)
        head = 0.0 if top <= EPS else u.minus_infinity * top
        body = float((w1 * eta * A) @ u.eval_many(v - x))
        val = x + head + body
        return np.array([val]), np.array([val == NEG_INF])

    pts = set(L.breakpoints)
    for kink in u.kinks:
        pts.update(float(t) - kink for t in v)
    M = probe_scale(v, [L], extra=u.kinks)
    found = scan(sorted(pts), phi, M)
    diag = {"eta": eta.tolist(), "evaluations": found.evaluations, "found_at": found.where}
    if found.value == NEG_INF:
        probes = found.descent.get("probes") or [(M, NEG_INF), (4 * M, NEG_INF)]
        cert = descent_certificate("descent", probes, descending=True,
                                   parameter=found.descent["parameter"], x=found.x)
        res = InfConvResult(NEG_INF, "cor3-utility", None, {}, diag, cert)
        res.agents = agents
        return res
    wit = None
    params = {"x_star": found.x}
    diag["attained"] = found.attained
    if found.attained:
        obj = SetObjective(space, agent2, v, M)
        y = obj.y_probe(found.x, 1.0)
        wit = set_witness(space, v, found.x, y, low(found.x))
        params["y_star"] = y
    res = InfConvResult(found.value, "cor3-utility", wit, params, diag)
    res.agents = agents
    return res


__all__ = [
    "consensus_distortion_integral",
    "cor2_distortion",
    "cor2_lvarplus",
    "cor2_utility",
    "cor3_es",
    "cor3_utility",
]
