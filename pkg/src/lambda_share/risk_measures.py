"""Risk functionals on finite spaces.

Every functional has a scalar form taking ``(space, measure_id, X, ...)``
and a batched kernel taking a 2-D array of outcome rows and matching
probabilities.  The engines evaluate thousands of candidate allocations at
once through the kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lambda_fn import DistortionFunction, StepLambda, UtilityFunction
from .prob_core import (
    EPS,
    EventSet,
    FiniteSpace,
    ProbabilityError,
    ZeroMassError,
    values_of,
)

NEG_INF = -math.inf

KINDS = (
    "var",
    "es",
    "les",
    "lambda_var",
    "lambda_var_plus",
    "distortion",
    "expected_utility",
    "co_var",
    "co_es",
    "co_lambda_var",
)
_BASE = {"co_var": "var", "co_es": "es", "co_lambda_var": "lambda_var"}


class MeasureSpecError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """A risk functional together with the belief it is evaluated under.

    ``literal`` switches ``co_lambda_var`` to the reading
    ``inf{x : P(X <= x | B) >= Lambda(x)}``.
    """

    kind: str
    belief: str = "P"
    alpha: float | None = None
    lam: StepLambda | None = None
    g: DistortionFunction | None = None
    u: UtilityFunction | None = None
    event: EventSet | None = None
    literal: bool = False

    def __post_init__(self):
        k = self.kind
        if k not in KINDS:
            raise MeasureSpecError(f"unknown measure kind {k!r}")
        if k in ("var", "co_var"):
            if self.alpha is None or not (0.0 <= self.alpha <= 1.0):
                raise MeasureSpecError(f"{k} needs alpha in [0, 1], got {self.alpha!r}")
        if k in ("es", "les", "co_es"):
            if self.alpha is None or not (0.0 < self.alpha <= 1.0):
                raise MeasureSpecError(f"{k} needs alpha in (0, 1], got {self.alpha!r}")
        if k in ("lambda_var", "lambda_var_plus", "co_lambda_var") and self.lam is None:
            raise MeasureSpecError(f"{k} needs a Lambda function")
        if k == "distortion" and self.g is None:
            raise MeasureSpecError("distortion needs a distortion function")
        if k == "expected_utility" and self.u is None:
            raise MeasureSpecError("expected_utility needs a utility function")
        if k.startswith("co_") and self.event is None:
            raise MeasureSpecError(f"{k} needs a conditioning event")

    @property
    def base_kind(self) -> str:
        return _BASE.get(self.kind, self.kind)

    @property
    def cash_additive(self) -> bool:
        """``rho(X + c) = rho(X) + c`` for constants ``c``."""
        return self.base_kind in ("var", "es", "les", "distortion")

    @property
    def shift_knots(self) -> tuple[float, ...]:
        """Thresholds where the functional's own parameters change."""
        if self.lam is not None:
            return self.lam.breakpoints
        if self.u is not None:
            return self.u.kinks
        return ()

    def distortion(self) -> DistortionFunction | None:
        b = self.base_kind
        if b == "es":
            return DistortionFunction.expected_shortfall(self.alpha)
        if b == "les":
            return DistortionFunction.lower_shortfall(self.alpha)
        if b == "distortion":
            return self.g
        return None

    def to_json(self, names: dict | None = None) -> dict:
        out = {"kind": self.kind, "belief": self.belief}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        for key, obj in (("lambda", self.lam), ("distortion", self.g), ("utility", self.u), ("event", self.event)):
            if obj is None:
                continue
            if names and id(obj) in names:
                out[key] = names[id(obj)]
            elif key == "event":
                out[key] = obj.membership.tolist()
            else:
                out[key] = obj.to_json()
        if self.literal:
            out["literal"] = True
        return out


def effective_weights(space: FiniteSpace, spec: MeasureSpec) -> np.ndarray:
    """Belief weights, conditioned on the spec's event for the co-measures.

    On a refined space the event is lifted through ``space.parents``.
    """
    w = space.weights(spec.belief)
    if not spec.kind.startswith("co_"):
        return w
    m = spec.event.membership
    if m.size != space.n:
        if space.parents is None or len(space.parents) != space.n:
            raise ProbabilityError("event does not match the space")
        m = m[list(space.parents)]
    mass = float(m @ w)
    if mass <= EPS:
        raise ZeroMassError("conditioning event has zero mass")
    return m * w / mass


# ---------------------------------------------------------------- kernels


def _rows(values, probs) -> tuple[np.ndarray, np.ndarray]:
    v = np.atleast_2d(np.asarray(values, dtype=float))
    p = np.broadcast_to(np.asarray(probs, dtype=float), v.shape)
    return v, p


def _sorted_rows(v: np.ndarray, p: np.ndarray):
    order = np.argsort(v, axis=1, kind="stable")
    vs = np.take_along_axis(v, order, axis=1)
    ps = np.take_along_axis(p, order, axis=1)
    return vs, ps, np.cumsum(ps, axis=1)


def var_batch(values, probs, alpha: float) -> np.ndarray:
    v, p = _rows(values, probs)
    if alpha >= 1.0:
        return np.full(v.shape[0], NEG_INF)
    vs, _, cum = _sorted_rows(v, p)
    idx = np.argmax(cum >= 1.0 - alpha - EPS, axis=1)
    idx = np.where((cum >= 1.0 - alpha - EPS).any(axis=1), idx, v.shape[1] - 1)
    return vs[np.arange(v.shape[0]), idx]


def distortion_batch(values, probs, g: DistortionFunction) -> np.ndarray:
    v, p = _rows(values, probs)
    vs, _, cum = _sorted_rows(v, p)
    surv = np.clip(1.0 - cum, 0.0, 1.0)
    surv[surv < EPS] = 0.0
    prev = np.concatenate([np.ones((v.shape[0], 1)), surv[:, :-1]], axis=1)
    weight = g.eval_many(prev) - g.eval_many(surv)
    # an infinite outcome with zero weight contributes nothing
    return np.sum(np.where(weight != 0.0, vs * np.where(weight != 0.0, weight, 1.0), 0.0), axis=1)


def expected_utility_batch(values, probs, u: UtilityFunction) -> np.ndarray:
    v, p = _rows(values, probs)
    uv = u.eval_many(v)
    terms = np.where(p > 0, p * np.where(np.isfinite(uv), uv, 0.0), 0.0)
    out = terms.sum(axis=1)
    dead = ((p > 0) & np.isneginf(uv)).any(axis=1)
    return np.where(dead, NEG_INF, out)


def _lambda_candidates(v: np.ndarray, p: np.ndarray, L: StepLambda):
    bps = np.asarray(L.breakpoints, dtype=float)
    cand = np.concatenate([v, np.broadcast_to(bps, (v.shape[0], bps.size))], axis=1)
    cand = np.sort(cand, axis=1)
    F = np.einsum("bck,bk->bc", (v[:, None, :] <= cand[:, :, None]).astype(float), p)
    lam = L.eval_many(cand)
    return cand, F, lam


def lambda_var_batch(values, probs, L: StepLambda) -> np.ndarray:
    """``inf{x : F(x) >= 1 - L(x)}`` per row."""
    v, p = _rows(values, probs)
    if L.values[0] >= 1.0 - EPS:
        return np.full(v.shape[0], NEG_INF)
    cand, F, lam = _lambda_candidates(v, p, L)
    ok = F + lam >= 1.0 - EPS
    return np.where(ok, cand, np.inf).min(axis=1)


def lambda_var_plus_batch(values, probs, L: StepLambda) -> np.ndarray:
    """``sup{x : F(x) < 1 - L(x)}`` per row (``-inf`` for an empty set)."""
    v, p = _rows(values, probs)
    cand, F, lam = _lambda_candidates(v, p, L)
    # representatives: one point left of everything, then each candidate
    below = L.values[0] < 1.0 - EPS
    strict = F + lam < 1.0 - EPS
    # representative j >= 1 sits at cand[j-1] and its interval ends at cand[j]
    ends = np.concatenate([cand[:, 1:], np.full((v.shape[0], 1), np.inf)], axis=1)
    last = np.where(strict, ends, NEG_INF).max(axis=1)
    head = cand[:, 0] if below else np.full(v.shape[0], NEG_INF)
    return np.maximum(last, head)


def co_lambda_var_literal_batch(values, probs, L: StepLambda) -> np.ndarray:
    """``inf{x : F(x) >= L(x)}`` per row."""
    v, p = _rows(values, probs)
    if L.values[0] <= EPS:
        return np.full(v.shape[0], NEG_INF)
    cand, F, lam = _lambda_candidates(v, p, L)
    ok = F >= lam - EPS
    return np.where(ok, cand, np.inf).min(axis=1)


def batch(spec: MeasureSpec, values, probs) -> np.ndarray:
    """Evaluate ``spec`` on each row of ``values`` under ``probs``.

    ``probs`` must already be the effective (conditioned) weights.
    """
    b = spec.base_kind
    if b == "var":
        return var_batch(values, probs, spec.alpha)
    if b in ("es", "les", "distortion"):
        return distortion_batch(values, probs, spec.distortion())
    if b == "expected_utility":
        return expected_utility_batch(values, probs, spec.u)
    if b == "lambda_var":
        if spec.kind == "co_lambda_var" and spec.literal:
            return co_lambda_var_literal_batch(values, probs, spec.lam)
        return lambda_var_batch(values, probs, spec.lam)
    if b == "lambda_var_plus":
        return lambda_var_plus_batch(values, probs, spec.lam)
    raise MeasureSpecError(f"unknown measure kind {spec.kind!r}")


# ---------------------------------------------------------------- scalar forms


def _one(kernel, space, q, X, *args) -> float:
    v = values_of(X, space)
    return float(kernel(v[None, :], space.weights(q), *args)[0])


def var(space: FiniteSpace, q: str, X, alpha: float) -> float:
    if not (0.0 <= alpha <= 1.0):
        raise ProbabilityError(f"VaR level {alpha!r} outside [0, 1]")
    return _one(var_batch, space, q, X, alpha)


def es(space: FiniteSpace, q: str, X, alpha: float) -> float:
    if not (0.0 < alpha <= 1.0):
        raise ProbabilityError(f"ES level {alpha!r} outside (0, 1]")
    return _one(distortion_batch, space, q, X, DistortionFunction.expected_shortfall(alpha))


def les(space: FiniteSpace, q: str, X, alpha: float) -> float:
    if not (0.0 < alpha <= 1.0):
        raise ProbabilityError(f"LES level {alpha!r} outside (0, 1]")
    return _one(distortion_batch, space, q, X, DistortionFunction.lower_shortfall(alpha))


def lambda_var(space: FiniteSpace, q: str, X, L: StepLambda) -> float:
    return _one(lambda_var_batch, space, q, X, L)


def lambda_var_plus(space: FiniteSpace, q: str, X, L: StepLambda) -> float:
    return _one(lambda_var_plus_batch, space, q, X, L)


def distortion(space: FiniteSpace, q: str, X, g: DistortionFunction) -> float:
    return _one(distortion_batch, space, q, X, g)


def expected_utility(space: FiniteSpace, q: str, X, u: UtilityFunction) -> float:
    return _one(expected_utility_batch, space, q, X, u)


def es_rockafellar(space: FiniteSpace, q: str, X, alpha: float) -> float:
    """``min_t t + E[(X - t)_+] / alpha`` with ``t`` over the atom values."""
    if not (0.0 < alpha <= 1.0):
        raise ProbabilityError(f"ES level {alpha!r} outside (0, 1]")
    v = values_of(X, space)
    w = space.weights(q)
    t = np.unique(v)
    obj = t + (np.clip(v[None, :] - t[:, None], 0.0, None) @ w) / alpha
    return float(obj.min())


def co_measure(
    space: FiniteSpace,
    base_p: str,
    B: EventSet,
    inner: str,
    X,
    *,
    alpha: float | None = None,
    lam: StepLambda | None = None,
    literal: bool = False,
) -> float:
    kind = inner if inner.startswith("co_") else f"co_{inner}"
    spec = MeasureSpec(kind, base_p, alpha=alpha, lam=lam, event=B, literal=literal)
    return evaluate(space, spec, X)


def evaluate(space: FiniteSpace, spec: MeasureSpec, X) -> float:
    v = values_of(X, space)
    return float(batch(spec, v[None, :], effective_weights(space, spec))[0])


__all__ = [
    "KINDS",
    "MeasureSpec",
    "MeasureSpecError",
    "NEG_INF",
    "batch",
    "co_measure",
    "distortion",
    "distortion_batch",
    "effective_weights",
    "es",
    "es_rockafellar",
    "evaluate",
    "expected_utility",
    "lambda_var",
    "lambda_var_batch",
    "lambda_var_plus",
    "lambda_var_plus_batch",
    "les",
    "var",
    "var_batch",
]
