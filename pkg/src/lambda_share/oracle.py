"""Brute-force ground truth for the inf-convolution engines.

Risk functionals are re-evaluated here straight from their defining
formulas with plain Python loops; nothing is imported from
``risk_measures``.  The allocation search enumerates the structured
families that are known to contain optimal allocations (constants plus the
excess over a level handed out on a partition) over lattices that are
deliberately wider than the engines' own.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

NEG_INF = -math.inf
TOL = 1e-12


class OracleCapError(ValueError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    max_atoms: int = 12
    max_partitions: int = 10**6
    y_grid: str = "lattice"
    probe_scales: tuple[float, ...] = (1.0, 4.0)
    max_denominator: int = 720

    def __post_init__(self):
        if self.max_atoms <= 0 or self.max_partitions <= 0:
            raise ValueError("oracle caps must be positive")
        if len(self.probe_scales) < 2:
            raise ValueError("at least two probe scales are needed to see a descent")


@dataclass
class OracleResult:
    value: float
    allocation: list | None = None
    detail: dict = field(default_factory=dict)


# ---------------------------------------------------------------- definitions


def _step(lam, x: float) -> float:
    bps, vals = lam.breakpoints, lam.values
    j = 0
    while j < len(bps) and bps[j] <= x:
        j += 1
    return vals[j]


def _cdf(vals, probs, x: float) -> float:
    return sum(p for v, p in zip(vals, probs) if v <= x)


def _support(vals, probs):
    """Distinct values carrying positive mass, with cumulative probabilities."""
    agg: dict[float, float] = {}
    for v, p in zip(vals, probs):
        if p > 0:
            agg[v] = agg.get(v, 0.0) + p
    xs = sorted(agg)
    cum, acc = [], 0.0
    for x in xs:
        acc += agg[x]
        cum.append(acc)
    return xs, cum


def _quantile(vals, probs, u: float) -> float:
    xs, cum = _support(vals, probs)
    for x, c in zip(xs, cum):
        if c >= u - TOL:
            return x
    return xs[-1]


def _overlap(a: float, b: float, lo: float, hi: float) -> float:
    return max(0.0, min(b, hi) - max(a, lo))


def _tail_mean(vals, probs, lo: float, hi: float) -> float:
    """Integral of the left quantile over probability levels ``[lo, hi]``."""
    xs, cum = _support(vals, probs)
    total, prev = 0.0, 0.0
    for x, c in zip(xs, cum):
        total += x * _overlap(prev, c, lo, hi)
        prev = c
    return total


def _g(knots, t: float) -> float:
    if t >= 1.0:
        return 1.0
    if t <= knots[0][0]:
        return knots[0][1]
    for (t0, g0), (t1, g1) in zip(knots, knots[1:]):
        if t0 < t <= t1:
            return g0 + (g1 - g0) * (t - t0) / (t1 - t0)
    return knots[-1][1]


def _u(util, x: float) -> float:
    ks = util.knots
    if x == NEG_INF:
        return util.minus_infinity
    if x < ks[0][0]:
        if math.isfinite(util.minus_infinity):
            return util.minus_infinity
        slope = (ks[1][1] - ks[0][1]) / (ks[1][0] - ks[0][0])
        return ks[0][1] + slope * (x - ks[0][0])
    for (x0, u0), (x1, u1) in zip(ks, ks[1:]):
        if x0 <= x <= x1:
            return u0 + (u1 - u0) * (x - x0) / (x1 - x0)
    if len(ks) == 1:
        return ks[0][1]
    slope = (ks[-1][1] - ks[-2][1]) / (ks[-1][0] - ks[-2][0])
    return ks[-1][1] + slope * (x - ks[-1][0])


def _lvar(vals, probs, lam, literal=False) -> float:
    pts = sorted(set(vals) | set(lam.breakpoints))
    below = pts[0] - 1.0

    def holds(x):
        F, L = _cdf(vals, probs, x), _step(lam, x)
        return F >= L - TOL if literal else F >= 1.0 - L - TOL

    if holds(below):
        return NEG_INF
    for x in pts:
        if holds(x):
            return x
    return math.inf


def _lvar_plus(vals, probs, lam) -> float:
    pts = sorted(set(vals) | set(lam.breakpoints))
    reps = [pts[0] - 1.0] + pts
    ends = pts + [math.inf]
    best = NEG_INF
    for r, e in zip(reps, ends):
        if _cdf(vals, probs, r) < 1.0 - _step(lam, r) - TOL:
            best = e
    return best


def dist_eval(spec, vals: Sequence[float], probs: Sequence[float]) -> float:
    """Evaluate ``spec`` on the distribution given by outcome/probability lists."""
    kind = spec.kind
    base = {"co_var": "var", "co_es": "es", "co_lambda_var": "lambda_var"}.get(kind, kind)
    if base == "var":
        if spec.alpha >= 1.0:
            return NEG_INF
        return _quantile(vals, probs, 1.0 - spec.alpha)
    if base == "es":
        a = spec.alpha
        return _tail_mean(vals, probs, 1.0 - a, 1.0) / a
    if base == "les":
        a = spec.alpha
        return _tail_mean(vals, probs, 0.0, a) / a
    if base == "distortion":
        xs, cum = _support(vals, probs)
        knots = spec.g.knots
        total, prev = 0.0, 0.0
        for x, c in zip(xs, cum):
            s_prev, s_now = 1.0 - prev, 1.0 - c
            if s_now < TOL:
                s_now = 0.0
            total += x * (_g(knots, s_prev) - _g(knots, s_now))
            prev = c
        return total
    if base == "expected_utility":
        total = 0.0
        for v, p in zip(vals, probs):
            if p <= 0:
                continue
            uv = _u(spec.u, v)
            if uv == NEG_INF:
                return NEG_INF
            total += p * uv
        return total
    if base == "lambda_var":
        return _lvar(vals, probs, spec.lam, literal=kind == "co_lambda_var" and spec.literal)
    if base == "lambda_var_plus":
        return _lvar_plus(vals, probs, spec.lam)
    raise ValueError(f"unknown measure kind {kind!r}")


def _belief(space, spec) -> list[float]:
    w = [float(t) for t in space.weights(spec.belief)]
    if not spec.kind.startswith("co_"):
        return w
    m = [float(t) for t in spec.event.membership]
    if len(m) != len(w):
        m = [m[p] for p in space.parents]
    mass = sum(a * b for a, b in zip(m, w))
    if mass <= TOL:
        raise ValueError("conditioning event has zero mass")
    return [a * b / mass for a, b in zip(m, w)]


def definition_eval(space, q_id: str, spec, Y) -> float:
    """Independent evaluation of ``spec`` on ``Y`` under measure ``q_id``."""
    vals = [float(t) for t in (Y.values if hasattr(Y, "values") else Y)]
    if q_id != spec.belief:
        spec = _with_belief(spec, q_id)
    return dist_eval(spec, vals, _belief(space, spec))


def _with_belief(spec, q_id):
    return type(spec)(
        spec.kind, q_id, alpha=spec.alpha, lam=spec.lam, g=spec.g, u=spec.u,
        event=spec.event, literal=spec.literal,
    )


# ---------------------------------------------------------------- lattices


def _scale(vals, lambdas, extra=()) -> float:
    bps = [b for L in lambdas for b in L.breakpoints] + list(extra)
    sv = max(vals) - min(vals)
    sb = (max(bps) - min(bps)) if bps else 0.0
    reach = max([abs(v) for v in vals] + [abs(b) for b in bps])
    return 4.0 * sv + sb + reach + 1.0


def _pieces(lam):
    edges = [NEG_INF] + list(lam.breakpoints) + [math.inf]
    return [(edges[j], edges[j + 1], v) for j, v in enumerate(lam.values)]


def _distribute(s: float, lows, highs) -> list[float] | None:
    """A point of the box ``[lows, highs)`` with coordinate sum ``s``."""
    y = []
    for lo, hi in zip(lows, highs):
        if math.isfinite(lo) and math.isfinite(hi):
            y.append(0.5 * (lo + hi))
        elif math.isfinite(lo):
            y.append(lo + 1.0)
        elif math.isfinite(hi):
            y.append(hi - 1.0)
        else:
            y.append(0.0)
    gap = s - sum(y)
    if gap > 0:
        room = [hi - t for t, hi in zip(y, highs)]
        if any(math.isinf(r) for r in room):
            y[[math.isinf(r) for r in room].index(True)] += gap
        else:
            tot = sum(room)
            if gap >= tot:
                return None
            y = [t + gap * r / tot for t, r in zip(y, room)]
    elif gap < 0:
        room = [t - lo for t, lo in zip(y, lows)]
        if any(math.isinf(r) for r in room):
            y[[math.isinf(r) for r in room].index(True)] += gap
        else:
            tot = sum(room)
            if -gap > tot + TOL:
                return None
            y = [max(lo, t + gap * r / tot) for t, r, lo in zip(y, room, lows)]
    return y


def _denominator(values, max_d: int) -> int:
    for d in range(1, max_d + 1):
        if all(abs(v * d - round(v * d)) < 1e-9 for v in values):
            return d
    raise OracleCapError(f"masses are not multiples of 1/D for any D <= {max_d}")


# ---------------------------------------------------------------- Lambda-VaR agents


def _assignments(tail_idx: tuple[int, ...], n: int, cap: int) -> np.ndarray:
    count = n ** len(tail_idx)
    if count > cap:
        raise OracleCapError(f"{count} tail partitions exceed the oracle cap of {cap}")
    return np.array(list(itertools.product(range(n), repeat=len(tail_idx))), dtype=int).reshape(
        count, len(tail_idx)
    )


def _lp_share(W, tail_idx, caps):
    n, m = len(W), len(tail_idx)
    A_eq = np.zeros((m, n * m))
    for j in range(m):
        for i in range(n):
            A_eq[j, i * m + j] = 1.0
    A_ub = np.zeros((n, n * m))
    for i in range(n):
        for j, k in enumerate(tail_idx):
            A_ub[i, i * m + j] = W[i][k]
    res = linprog(np.zeros(n * m), A_ub=A_ub, b_ub=np.array(caps) + 1e-13, A_eq=A_eq,
                  b_eq=np.ones(m), bounds=(0, 1), method="highs")
    if res.status != 0:
        return None
    return np.clip(res.x.reshape(n, m), 0.0, 1.0)


class _Sharer:
    def __init__(self, W, cap):
        self.W = W
        self.cap = cap
        self.loads: dict = {}
        self.lp: dict = {}

    def share(self, tail_idx: tuple[int, ...], caps: tuple[float, ...]):
        """Owner fractions (agents x tail atoms) or ``None`` if impossible."""
        n = len(self.W)
        if not tail_idx:
            return np.zeros((n, 0))
        if tail_idx not in self.loads:
            asg = _assignments(tail_idx, n, self.cap)
            Wt = np.array([[self.W[i][k] for k in tail_idx] for i in range(n)])
            loads = np.stack([(Wt[i][None, :] * (asg == i)).sum(axis=1) for i in range(n)], axis=1)
            self.loads[tail_idx] = (asg, loads)
        asg, loads = self.loads[tail_idx]
        ok = np.flatnonzero((loads <= np.array(caps) + TOL).all(axis=1))
        if ok.size:
            row = asg[ok[0]]
            return np.array([[1.0 if row[j] == i else 0.0 for j in range(len(tail_idx))] for i in range(n)])
        key = (tail_idx, caps)
        if key not in self.lp:
            self.lp[key] = _lp_share(self.W, tail_idx, caps)
        return self.lp[key]


def _eval_split(agents, W, vals, s, y, tail_idx, owner):
    """Total of definitional values of ``X_i = (X - s) 1_{A_i} + y_i``."""
    n, K = len(agents), len(vals)
    pos = {k: j for j, k in enumerate(tail_idx)}
    total = 0.0
    per = []
    for i, spec in enumerate(agents):
        xs, ps = [], []
        for k in range(K):
            if k in pos:
                for h in range(n):
                    f = owner[h][pos[k]]
                    if f > 0:
                        xs.append((vals[k] - s if h == i else 0.0) + y[i])
                        ps.append(f * W[i][k])
            else:
                # off the tail the excess goes to the last agent
                xs.append((vals[k] - s if i == n - 1 else 0.0) + y[i])
                ps.append(W[i][k])
        r = dist_eval(spec, xs, ps)
        per.append(r)
        total += r
    return total, per


def _brute_lvar(space, agents, X, config: OracleConfig) -> OracleResult:
    vals = [float(t) for t in (X.values if hasattr(X, "values") else X)]
    K, n = len(vals), len(agents)
    if K > config.max_atoms:
        raise OracleCapError(f"{K} atoms exceed the oracle cap of {config.max_atoms}")
    W = [_belief(space, a) for a in agents]
    Ls = [a.lam for a in agents]
    pieces = [_pieces(L) for L in Ls]
    combos = list(itertools.product(*[range(len(p)) for p in pieces]))
    lows = [[pieces[i][c[i]][0] for i in range(n)] for c in combos]
    highs = [[pieces[i][c[i]][1] for i in range(n)] for c in combos]
    levels = set(vals)
    for pick in itertools.product(*[L.breakpoints for L in Ls]):
        levels.add(sum(pick))
    sharer = _Sharer(W, config.max_partitions)
    best, arg = math.inf, None
    for s in sorted(levels):
        tail_idx = tuple(k for k in range(K) if vals[k] > s)
        for lo, hi in zip(lows, highs):
            if not (sum(lo) <= s < sum(hi)):
                continue
            y = _distribute(s, lo, hi)
            if y is None:
                continue
            caps = tuple(_step(L, t) for L, t in zip(Ls, y))
            owner = sharer.share(tail_idx, caps)
            if owner is None:
                continue
            tot, per = _eval_split(agents, W, vals, s, y, tail_idx, owner)
            if tot < best - 1e-12:
                best, arg = tot, {"s": s, "y": y, "values": per}
    # descent probes: push the total level far below every atom
    M = _scale(vals, Ls)
    probe_best = []
    for mult in config.probe_scales:
        pb = math.inf
        for lo, hi in zip(lows, highs):
            if math.isfinite(sum(lo)):
                continue
            s = min(min(vals) - 1.0, sum(hi) - 1.0) - mult * M
            y = _distribute(s, lo, hi)
            if y is None:
                continue
            caps = tuple(_step(L, t) for L, t in zip(Ls, y))
            tail_idx = tuple(range(K))
            owner = sharer.share(tail_idx, caps)
            if owner is None:
                continue
            tot, _ = _eval_split(agents, W, vals, s, y, tail_idx, owner)
            pb = min(pb, tot)
        probe_best.append(pb)
    descending = all(math.isfinite(a) and b < a - 1e-9 for a, b in zip(probe_best, probe_best[1:]))
    if descending:
        return OracleResult(NEG_INF, None, {"probes": probe_best})
    return OracleResult(best, arg, {"probes": probe_best})


# ---------------------------------------------------------------- one Lambda-VaR agent plus rho


def _unit_vectors(units: Sequence[int], total: int):
    """All count vectors ``0 <= c_k <= units_k`` with ``sum(c) == total``."""
    out = []

    def rec(k, left, acc):
        if k == len(units):
            if left == 0:
                out.append(tuple(acc))
            return
        rest = sum(units[k + 1:])
        for c in range(max(0, left - rest), min(units[k], left) + 1):
            acc.append(c)
            rec(k + 1, left - c, acc)
            acc.pop()

    rec(0, total, [])
    return out


RIGHT_STEP = 1e-11


def _grid(points, probes, right_limits: bool = False):
    pts = sorted(set(points))
    mids = [0.5 * (a + b) for a, b in zip(pts, pts[1:])]
    out = set(pts) | set(mids) | {pts[0] - 1.0, pts[-1] + 1.0} | set(probes)
    if right_limits:
        # an infimum approached from the right of a lattice point is not attained on it
        out |= {p + RIGHT_STEP * max(1.0, abs(p)) for p in pts}
    return sorted(out)


def _brute_lvar_rho(space, agents, X, config: OracleConfig) -> OracleResult:
    a1, a2 = agents
    vals = [float(t) for t in (X.values if hasattr(X, "values") else X)]
    K = len(vals)
    w1, w2 = _belief(space, a1), _belief(space, a2)
    L = a1.lam
    D = _denominator(w1 + list(L.values), config.max_denominator)
    units = [round(w * D) for w in w1]
    free = [k for k in range(K) if units[k] == 0]
    knots = list(a2.lam.breakpoints) if a2.lam is not None else (
        [k[0] for k in a2.u.knots] if a2.u is not None else [])
    M = _scale(vals, [L] + ([a2.lam] if a2.lam is not None else []), knots)
    base = list(vals) + list(L.breakpoints) + [v - c for v in vals for c in knots]
    cache: dict = {}
    results, far = [], []
    for mult in config.probe_scales:
        xs = _grid(base, [-mult * M], right_limits=True)
        ys = sorted(set(vals) | {min(vals) - 1.0, -mult * M})
        best, arg = math.inf, None
        tails: dict = {}
        far.append(tails)
        for x in xs:
            lam_x = _step(L, x)
            m = round((1.0 - lam_x) * D)
            if abs((1.0 - lam_x) * D - m) > 1e-9:
                raise OracleCapError("Lambda values are not multiples of 1/D")
            if m not in cache:
                cache[m] = _unit_vectors(units, m)
            for counts in cache[m]:
                for extra in itertools.product((0, 1), repeat=len(free)):
                    f = [c / u if u else 0.0 for c, u in zip(counts, units)]
                    for k, e in zip(free, extra):
                        f[k] = float(e)
                    for y in ys:
                        v1, p1, v2, p2 = [], [], [], []
                        for k in range(K):
                            for share, in_b in ((f[k], True), (1.0 - f[k], False)):
                                if share <= 0:
                                    continue
                                v1.append(x if in_b else vals[k] - y)
                                p1.append(share * w1[k])
                                v2.append(vals[k] - x if in_b else y)
                                p2.append(share * w2[k])
                        r1 = dist_eval(a1, v1, p1)
                        r2 = dist_eval(a2, v2, p2)
                        tot = r1 + r2
                        if y == -mult * M:
                            tails[(x, tuple(f))] = tot
                        if tot < best - 1e-12:
                            best, arg = tot, {"x": x, "y": y, "fractions": f, "values": [r1, r2]}
        results.append((best, arg))
    return _conclude(results, far)


def _conclude(results, far) -> OracleResult:
    """``-inf`` if the best value or any single candidate keeps falling as the probe grows.

    Past every value of ``X`` a candidate is affine in the probe, so one
    strict drop means it falls without bound even while another candidate
    is still lower at both probes.
    """
    probes = [r[0] for r in results]
    if all(b < a - 1e-9 for a, b in zip(probes, probes[1:])):
        return OracleResult(NEG_INF, None, {"probes": probes})
    for key in far[0].keys() & far[-1].keys():
        if far[-1][key] < far[0][key] - 1e-9:
            return OracleResult(NEG_INF, None, {"probes": probes, "falling": [far[0][key], far[-1][key]],
                                                "candidate": list(key)})
    return OracleResult(results[0][0], results[0][1], {"probes": probes})


# ---------------------------------------------------------------- couplings


def _tables(row_units: Sequence[int], col_units: Sequence[int], cap: int):
    """Nonnegative integer tables with the given row and column sums."""
    out = []

    def rec(r, cols_left, acc):
        if len(out) > cap:
            raise OracleCapError(f"more than {cap} couplings")
        if r == len(row_units):
            if all(c == 0 for c in cols_left):
                out.append([row[:] for row in acc])
            return
        for row in _compositions(row_units[r], cols_left):
            acc.append(list(row))
            rec(r + 1, [c - t for c, t in zip(cols_left, row)], acc)
            acc.pop()

    rec(0, list(col_units), [])
    return out


@lru_cache(maxsize=None)
def _compositions_cached(total: int, bounds: tuple[int, ...]):
    if not bounds:
        return [()] if total == 0 else []
    res = []
    for c in range(min(total, bounds[0]) + 1):
        for rest in _compositions_cached(total - c, bounds[1:]):
            res.append((c,) + rest)
    return res


def _compositions(total, bounds):
    return _compositions_cached(int(total), tuple(int(b) for b in bounds))


def brute_coupling(space, q1_id: str, levels, objective, X, config: OracleConfig | None = None):
    """Minimum of ``objective(X - Z)`` over placements ``Z`` of the level masses.

    ``levels`` is a list of ``(value, mass)`` pairs whose masses are
    multiples of ``1/D`` for some ``D`` that also makes every ``q1`` weight
    a multiple.  Atoms of zero ``q1`` mass may take any level.
    Returns ``(value, placement)`` where the placement maps each atom to its
    ``(level value, fraction)`` pieces.
    """
    config = config or OracleConfig()
    vals = [float(t) for t in (X.values if hasattr(X, "values") else X)]
    w1 = [float(t) for t in space.weights(q1_id)]
    w2 = _belief(space, objective)
    D = _denominator(w1 + [m for _, m in levels], config.max_denominator)
    rows = [round(w * D) for w in w1]
    cols = [round(m * D) for _, m in levels]
    if sum(cols) != D:
        raise ValueError("level masses must add up to one")
    pos = [k for k in range(len(vals)) if rows[k] > 0]
    free = [k for k in range(len(vals)) if rows[k] == 0]
    tables = _tables([rows[k] for k in pos], cols, config.max_partitions)
    best, arg = math.inf, None
    for table in tables:
        for pick in itertools.product(range(len(levels)), repeat=len(free)):
            xs, ps, place = [], [], {}
            for r, k in enumerate(pos):
                place[k] = []
                for l, c in enumerate(table[r]):
                    if c:
                        frac = c / rows[k]
                        xs.append(vals[k] - levels[l][0])
                        ps.append(frac * w2[k])
                        place[k].append((levels[l][0], frac))
            for k, l in zip(free, pick):
                xs.append(vals[k] - levels[l][0])
                ps.append(w2[k])
                place[k] = [(levels[l][0], 1.0)]
            r = dist_eval(objective, xs, ps)
            if r < best - 1e-12:
                best, arg = r, place
    return best, arg


def plus_levels(lam, x: float, y: float) -> list[tuple[float, float]]:
    """Values and masses of the quantile function of ``Lambda_{x,y}``."""
    run = _step(lam, x)
    out = [(x, 1.0 - run)]
    for b, v in zip(lam.breakpoints, lam.values[1:]):
        if x < b < y and v < run:
            out.append((b, run - v))
            run = v
    out.append((y, run))
    return [(z, m) for z, m in out if m > TOL]


def _brute_lvarplus_rho(space, agents, X, config: OracleConfig) -> OracleResult:
    a1, a2 = agents
    vals = [float(t) for t in (X.values if hasattr(X, "values") else X)]
    L = a1.lam
    knots = list(a2.lam.breakpoints) if a2.lam is not None else (
        [k[0] for k in a2.u.knots] if a2.u is not None else [])
    M = _scale(vals, [L] + ([a2.lam] if a2.lam is not None else []), knots)
    base = list(vals) + list(L.breakpoints) + [v - c for v in vals for c in knots]
    results, far = [], []
    for mult in config.probe_scales:
        xs = _grid(base, [-mult * M])
        best, arg = math.inf, None
        tails: dict = {}
        far.append(tails)
        w1 = [float(t) for t in space.weights(a1.belief)]
        for x in xs:
            ys = sorted({y for y in _grid(base, [mult * M]) if y >= x} | {x})
            for y in ys:
                levels = plus_levels(L, x, y)
                r2, place = brute_coupling(space, a1.belief, levels, a2, vals, config)
                z1, p1 = [], []
                for k, pcs in place.items():
                    for z, frac in pcs:
                        z1.append(z)
                        p1.append(frac * w1[k])
                r1 = dist_eval(a1, z1, p1)
                tot = r1 + r2
                if y == mult * M:
                    tails[x] = tot
                if tot < best - 1e-12:
                    best, arg = tot, {"x": x, "y": y, "placement": place, "values": [r1, r2]}
        results.append((best, arg))
    return _conclude(results, far)


def brute_infconv(space, agents, X, config: OracleConfig | None = None) -> OracleResult:
    """Exhaustive minimum over the structured allocation families.

    * all agents Lambda-VaR: constants plus the excess over a level shared
      on a partition;
    * Lambda-VaR plus any functional: the excess over ``x`` on a set of
      first-belief mass ``1 - Lambda(x)``, a constant elsewhere;
    * Lambda-VaR+ plus any functional: placements of the quantile levels of
      ``Lambda_{x,y}``.
    """
    config = config or OracleConfig()
    agents = list(agents)
    if len(agents) == 1:
        a = agents[0]
        return OracleResult(definition_eval(space, a.belief, a, X))
    if all(a.kind == "lambda_var" for a in agents):
        return _brute_lvar(space, agents, X, config)
    if len(agents) == 2 and agents[0].kind == "lambda_var":
        return _brute_lvar_rho(space, agents, X, config)
    if len(agents) == 2 and agents[0].kind == "lambda_var_plus":
        return _brute_lvarplus_rho(space, agents, X, config)
    raise ValueError("no brute-force family for this agent mix")


__all__ = [
    "OracleCapError",
    "OracleConfig",
    "OracleResult",
    "brute_coupling",
    "brute_infconv",
    "definition_eval",
    "dist_eval",
    "plus_levels",
]
