"""Right-continuous step functions of the loss threshold and their transforms.

A :class:`StepLambda` with breakpoints ``b_1 < ... < b_k`` and values
``v_0, ..., v_k`` equals ``v_0`` on ``(-inf, b_1)`` and ``v_j`` on
``[b_j, b_{j+1})``.  Step inputs keep every supremum over decompositions
exactly computable: within a product of pieces the objective is constant.
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EPS = 1e-12
CELL_GUARD = 10**6


class LambdaError(ValueError):
    pass


@dataclass(frozen=True)
class StepLambda:
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(bps) + 1:
            raise LambdaError(f"{len(bps)} breakpoints need {len(bps) + 1} values, got {len(vals)}")
        if any(not math.isfinite(b) for b in bps):
            raise LambdaError("breakpoints must be finite")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise LambdaError("breakpoints must be strictly increasing")
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise LambdaError("values must lie in [0, 1]")
        # drop breakpoints between equal neighbours
        nb, nv = [], [vals[0]]
        for b, v in zip(bps, vals[1:]):
            if v != nv[-1]:
                nb.append(b)
                nv.append(v)
        object.__setattr__(self, "breakpoints", tuple(nb))
        object.__setattr__(self, "values", tuple(nv))

    @classmethod
    def constant(cls, value: float) -> "StepLambda":
        return cls((), (value,))

    def __call__(self, x: float) -> float:
        return self.values[bisect_right(self.breakpoints, x)]

    def eval_many(self, xs) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.breakpoints), np.asarray(xs, dtype=float), side="right")
        return np.asarray(self.values)[idx]

    @property
    def lam_minus(self) -> float:
        return min(self.values)

    @property
    def lam_plus(self) -> float:
        return max(self.values)

    @property
    def is_constant(self) -> bool:
        return not self.breakpoints

    @property
    def is_increasing(self) -> bool:
        return all(b >= a for a, b in zip(self.values, self.values[1:]))

    @property
    def is_decreasing(self) -> bool:
        return all(b <= a for a, b in zip(self.values, self.values[1:]))

    def pieces(self) -> list[tuple[float, float, float]]:
        """``(lower, upper, value)`` for each half-open piece ``[lower, upper)``."""
        edges = (-math.inf,) + self.breakpoints + (math.inf,)
        return [(edges[j], edges[j + 1], v) for j, v in enumerate(self.values)]

    def shifted(self, dx: float) -> "StepLambda":
        """``z -> self(z - dx)``."""
        return StepLambda(tuple(b + dx for b in self.breakpoints), self.values)

    def to_json(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}

    @classmethod
    def from_json(cls, obj) -> "StepLambda":
        if isinstance(obj, (int, float)):
            return cls.constant(float(obj))
        return cls(tuple(obj.get("breakpoints", ())), tuple(obj["values"]))


def eval(L: StepLambda, x: float) -> float:  # noqa: A001 - mirrors the operation name
    return L(x)


def check_bounds(L: StepLambda, name: str = "Lambda") -> None:
    if not (0.0 < L.lam_minus <= L.lam_plus < 1.0):
        raise LambdaError(
            f"{name} must satisfy 0 < inf < = sup < 1; got inf={L.lam_minus}, sup={L.lam_plus}"
        )


def running_inf(L: StepLambda, x: float) -> StepLambda:
    """``z -> min over [x, z]`` of ``L``; left of ``x`` it repeats ``L(x)``."""
    current = L(x)
    bps, vals = [], [current]
    for b, v in zip(L.breakpoints, L.values[1:]):
        if b <= x:
            continue
        if v < current:
            current = v
            bps.append(b)
            vals.append(v)
    return StepLambda(tuple(bps), tuple(vals))


def cdf_transform(L: StepLambda, x: float, y: float) -> StepLambda:
    """Distribution function that is 0 below ``x``, ``1 - running_inf`` up to ``y``, then 1."""
    if y < x:
        raise LambdaError(f"cdf_transform needs y >= x, got x={x}, y={y}")
    if y == x:
        return StepLambda((x,), (0.0, 1.0))
    run = running_inf(L, x)
    bps, vals = [x], [0.0, 1.0 - run(x)]
    for b, v in zip(run.breakpoints, run.values[1:]):
        if x < b < y:
            bps.append(b)
            vals.append(1.0 - v)
    bps.append(y)
    vals.append(1.0)
    return StepLambda(tuple(bps), tuple(vals))


def generalized_inverse(F: StepLambda, t: float) -> float:
    """Left quantile ``inf{z : F(z) >= t}`` of a step distribution function."""
    if not (0.0 < t < 1.0):
        raise LambdaError(f"level {t!r} outside (0, 1)")
    for lo, _, v in F.pieces():
        if v >= t - EPS:
            return lo
    return math.inf


def split_sum(lowers: Sequence[float], uppers: Sequence[float], total: float) -> tuple[float, ...]:
    """Some ``y`` with ``lowers <= y < uppers`` componentwise and ``sum(y) == total``.

    Deterministic: coordinates start at their lower ends (or one unit below a
    finite upper end when unbounded below); a deficit goes to the first
    coordinate unbounded below, a surplus to the first coordinate unbounded
    above or else is shared in proportion to the remaining room.
    """
    n = len(lowers)
    y = []
    for lo, up in zip(lowers, uppers):
        if math.isfinite(lo):
            y.append(lo)
        elif math.isfinite(up):
            y.append(up - 1.0)
        else:
            y.append(0.0)
    delta = total - sum(y)
    if delta < 0:
        free = [i for i in range(n) if not math.isfinite(lowers[i])]
        if not free:
            raise LambdaError("total below the sum of lower ends")
        y[free[0]] += delta
    elif delta > 0:
        room = [uppers[i] - y[i] for i in range(n)]
        open_up = [i for i in range(n) if not math.isfinite(room[i])]
        if open_up:
            y[open_up[0]] += delta
        else:
            tot_room = sum(room)
            if delta >= tot_room:
                raise LambdaError("total not below the sum of upper ends")
            for i in range(n):
                y[i] += delta * room[i] / tot_room
    return tuple(y)


@dataclass(frozen=True)
class Aggregate:
    """Result of a sup-convolution together with attaining decompositions.

    ``points`` are representatives of the elementary intervals on which the
    sup is constant and ``cells[j]`` is the piece index tuple attaining it on
    interval ``j``.
    """

    function: StepLambda
    components: tuple[StepLambda, ...]
    scales: tuple[float, ...]
    edges: tuple[float, ...]
    cells: tuple[tuple[int, ...], ...]
    attained: bool = True
    right_continuous: bool = True

    def __call__(self, x: float) -> float:
        return self.function(x)

    def cell_at(self, x: float) -> tuple[int, ...]:
        return self.cells[bisect_right(self.edges, x)]

    def decompose(self, x: float) -> tuple[float, ...]:
        """A decomposition ``y`` of ``x`` attaining the supremum at ``x``."""
        cell = self.cell_at(x)
        pcs = [L.pieces()[j] for L, j in zip(self.components, cell)]
        return split_sum([p[0] for p in pcs], [p[1] for p in pcs], x)

    def piece_decompositions(self) -> list[tuple[float, tuple[float, ...]]]:
        """One attaining decomposition at a representative point of each output piece."""
        out = []
        for lo, hi, _ in self.function.pieces():
            x = lo if math.isfinite(lo) else (hi - 1.0 if math.isfinite(hi) else 0.0)
            out.append((x, self.decompose(x)))
        return out


def sup_convolution(Ls: Sequence[StepLambda], scales: Sequence[float]) -> Aggregate:
    """``x -> sup over y_1+...+y_n = x`` of ``min(1, sum scales_i * L_i(y_i))``."""
    if not Ls:
        raise LambdaError("need at least one function")
    sizes = [len(L.values) for L in Ls]
    if math.prod(sizes) > CELL_GUARD:
        raise LambdaError(f"{math.prod(sizes)} piece combinations exceed the guard of {CELL_GUARD}")
    pieces = [L.pieces() for L in Ls]
    cells = list(itertools.product(*[range(s) for s in sizes]))
    lo = np.array([sum(pieces[i][c[i]][0] for i in range(len(Ls))) for c in cells])
    hi = np.array([sum(pieces[i][c[i]][1] for i in range(len(Ls))) for c in cells])
    val = np.array(
        [min(1.0, sum(scales[i] * pieces[i][c[i]][2] for i in range(len(Ls)))) for c in cells]
    )
    ends = np.concatenate([lo[np.isfinite(lo)], hi[np.isfinite(hi)]])
    edges = np.unique(ends)
    if edges.size == 0:
        reps = np.array([0.0])
    else:
        reps = np.concatenate([[edges[0] - 1.0], edges])
    inside = (lo[None, :] <= reps[:, None]) & (reps[:, None] < hi[None, :])
    scored = np.where(inside, val[None, :], -1.0)
    best = scored.argmax(axis=1)
    best_val = scored[np.arange(reps.size), best]
    func = StepLambda(tuple(edges.tolist()), tuple(best_val.tolist()))
    return Aggregate(
        function=func,
        components=tuple(Ls),
        scales=tuple(float(s) for s in scales),
        edges=tuple(edges.tolist()),
        cells=tuple(cells[b] for b in best),
    )


def lambda_star(Ls: Sequence[StepLambda]) -> Aggregate:
    for i, L in enumerate(Ls):
        check_bounds(L, f"Lambda_{i + 1}")
    return sup_convolution(Ls, [1.0] * len(Ls))


def lambda_diamond(Ls: Sequence[StepLambda], weights: Sequence[float], base: float) -> Aggregate:
    """Sup-convolution with summands scaled by ``weights[i] / base``."""
    if base <= 0:
        raise LambdaError("the intersection probability must be positive")
    if len(weights) != len(Ls):
        raise LambdaError("one weight per function")
    if any(w < base - EPS for w in weights):
        raise LambdaError("each weight must be at least the intersection probability")
    for i, L in enumerate(Ls):
        check_bounds(L, f"Lambda_{i + 1}")
    return sup_convolution(Ls, [w / base for w in weights])


def lambda_chain(Ls: Sequence[StepLambda], y_prefix: Sequence[float]) -> StepLambda:
    """Last function shifted by the final prefix point plus the earlier increments."""
    n = len(Ls)
    if len(y_prefix) != n - 1:
        raise LambdaError(f"need {n - 1} prefix points, got {len(y_prefix)}")
    pts = [0.0] + [float(y) for y in y_prefix]
    const = sum(Ls[i](pts[i + 1] - pts[i]) for i in range(n - 1))
    last = Ls[-1]
    return StepLambda(
        tuple(b + pts[-1] for b in last.breakpoints),
        tuple(min(1.0, v + const) for v in last.values),
    )


def lambda_bar(
    L: StepLambda, L1: StepLambda, x: float, pB1: float, pB2: float, pB12: float
) -> StepLambda:
    if pB12 <= 0:
        raise LambdaError("the intersection probability must be positive")
    head = pB1 * L(x)
    return StepLambda(
        tuple(b + x for b in L1.breakpoints),
        tuple(min(1.0, (head + pB2 * v) / pB12) for v in L1.values),
    )


@dataclass(frozen=True)
class DistortionFunction:
    """Piecewise-linear nondecreasing ``g`` on [0, 1], left-continuous.

    A jump at ``t`` is written as two knots ``(t, a), (t, b)`` with
    ``a < b``; ``g(t) = a`` for ``t < 1`` while ``g(1) = 1`` always, so a
    jump at 1 puts all weight on the lowest outcome.
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ks = tuple((float(t), float(g)) for t, g in self.knots)
        if len(ks) < 2:
            raise LambdaError("a distortion needs at least two knots")
        ts = [t for t, _ in ks]
        gs = [g for _, g in ks]
        if ts[0] != 0.0 or ts[-1] != 1.0:
            raise LambdaError("distortion knots must span [0, 1]")
        if any(b < a for a, b in zip(ts, ts[1:])) or any(b < a for a, b in zip(gs, gs[1:])):
            raise LambdaError("distortion knots must be nondecreasing")
        if gs[0] != 0.0 or gs[-1] != 1.0:
            raise LambdaError("a distortion runs from g(0)=0 to g(1)=1")
        object.__setattr__(self, "knots", ks)

    @classmethod
    def identity(cls) -> "DistortionFunction":
        return cls(((0.0, 0.0), (1.0, 1.0)))

    @classmethod
    def expected_shortfall(cls, alpha: float) -> "DistortionFunction":
        if alpha >= 1.0:
            return cls.identity()
        return cls(((0.0, 0.0), (alpha, 1.0), (1.0, 1.0)))

    @classmethod
    def lower_shortfall(cls, alpha: float) -> "DistortionFunction":
        if alpha >= 1.0:
            return cls.identity()
        return cls(((0.0, 0.0), (1.0 - alpha, 0.0), (1.0, 1.0)))

    def __call__(self, t: float) -> float:
        return float(self.eval_many(np.array([t]))[0])

    def eval_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        kt = np.array([k[0] for k in self.knots])
        kg = np.array([k[1] for k in self.knots])
        # b: first knot with t_b >= t; a = b - 1 has t_a < t
        b = np.searchsorted(kt, ts, side="left")
        b = np.clip(b, 0, kt.size - 1)
        a = np.clip(b - 1, 0, kt.size - 1)
        span = kt[b] - kt[a]
        frac = np.where(span > 0, (ts - kt[a]) / np.where(span > 0, span, 1.0), 1.0)
        out = kg[a] + (kg[b] - kg[a]) * frac
        out = np.where(b == 0, kg[0], out)
        return np.where(ts >= 1.0, 1.0, out)

    def is_concave(self) -> bool:
        """Slopes never increase; a jump is allowed only at 0."""
        slopes = []
        for (t0, g0), (t1, g1) in zip(self.knots, self.knots[1:]):
            if t1 == t0:
                if g1 > g0 and t0 > 0.0:
                    return False
                continue
            slopes.append((g1 - g0) / (t1 - t0))
        return all(b <= a + 1e-12 for a, b in zip(slopes, slopes[1:]))

    def to_json(self) -> dict:
        return {"knots": [list(k) for k in self.knots]}

    @classmethod
    def from_json(cls, obj) -> "DistortionFunction":
        return cls(tuple(tuple(k) for k in obj["knots"]))


@dataclass(frozen=True)
class UtilityFunction:
    """Piecewise-linear nondecreasing utility.

    Between knots ``u`` interpolates; above the last knot it continues with
    the last slope.  Below the first knot it is the constant
    ``minus_infinity`` when that is finite, otherwise it continues with the
    first slope so that it tends to minus infinity.
    """

    knots: tuple[tuple[float, float], ...]
    minus_infinity: float

    def __post_init__(self):
        ks = tuple((float(x), float(u)) for x, u in self.knots)
        if not ks:
            raise LambdaError("a utility needs at least one knot")
        xs = [x for x, _ in ks]
        us = [u for _, u in ks]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise LambdaError("utility knots must be strictly increasing in x")
        if any(b < a for a, b in zip(us, us[1:])):
            raise LambdaError("a utility must be nondecreasing")
        m = float(self.minus_infinity)
        if m == math.inf or (math.isfinite(m) and m > us[0]):
            raise LambdaError("u(-inf) must not exceed the utility at the first knot")
        if m == -math.inf and (len(ks) < 2 or us[1] <= us[0]):
            raise LambdaError("u(-inf) = -inf needs a strictly increasing first segment")
        object.__setattr__(self, "knots", ks)
        object.__setattr__(self, "minus_infinity", m)

    @classmethod
    def identity(cls) -> "UtilityFunction":
        return cls(((0.0, 0.0), (1.0, 1.0)), -math.inf)

    def _slopes(self) -> tuple[float, float]:
        ks = self.knots
        if len(ks) < 2:
            return 0.0, 0.0
        first = (ks[1][1] - ks[0][1]) / (ks[1][0] - ks[0][0])
        last = (ks[-1][1] - ks[-2][1]) / (ks[-1][0] - ks[-2][0])
        return first, last

    def __call__(self, x: float) -> float:
        return float(self.eval_many(np.array([x], dtype=float))[0])

    def eval_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        kx = np.array([k[0] for k in self.knots])
        ku = np.array([k[1] for k in self.knots])
        first, last = self._slopes()
        out = np.interp(xs, kx, ku)
        above = xs > kx[-1]
        out = np.where(above, ku[-1] + last * (xs - kx[-1]), out)
        below = xs < kx[0]
        if math.isfinite(self.minus_infinity):
            out = np.where(below, self.minus_infinity, out)
        else:
            out = np.where(below, ku[0] + first * (xs - kx[0]), out)
        return np.where(np.isneginf(xs), self.minus_infinity, out)

    @property
    def kinks(self) -> tuple[float, ...]:
        return tuple(k[0] for k in self.knots)

    def to_json(self) -> dict:
        m = self.minus_infinity
        return {"knots": [list(k) for k in self.knots], "minus_infinity": "-inf" if m == -math.inf else m}

    @classmethod
    def from_json(cls, obj) -> "UtilityFunction":
        m = obj.get("minus_infinity", "-inf")
        m = -math.inf if m == "-inf" else float(m)
        return cls(tuple(tuple(k) for k in obj["knots"]), m)


__all__ = [
    "Aggregate",
    "DistortionFunction",
    "LambdaError",
    "StepLambda",
    "UtilityFunction",
    "cdf_transform",
    "check_bounds",
    "generalized_inverse",
    "lambda_bar",
    "lambda_chain",
    "lambda_diamond",
    "lambda_star",
    "running_inf",
    "split_sum",
    "sup_convolution",
]
