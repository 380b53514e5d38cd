"""One Lambda-VaR+ agent sharing with an arbitrary monotone functional.

The first agent holds ``Z = F^{-1}(U)`` where ``F`` is the distribution
function of ``cdf_transform(Lambda, x, y)`` and ``U`` is uniform under the
first belief; the second holds ``X - Z``.  ``Z`` takes finitely many level
values with fixed first-belief masses, so choosing ``U`` means choosing a
transportation plan between atoms and levels.  The top level ``y`` only
lowers the second agent's position and is handled by two probes.

For functionals that are quasi-concave along mixtures the best plan is a
vertex of the transportation polytope.  Vertices are basic solutions, one
per spanning tree of the complete bipartite atom/level graph, and are all
enumerated.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from ..lambda_fn import StepLambda, cdf_transform, check_bounds
from ..prob_core import EPS, EventSet, FiniteSpace, lift, partition_refinement, values_of
from ..risk_measures import MeasureSpec, batch, effective_weights
from .lattice import TOL, ScanResult, scan
from .result import (
    NEG_INF,
    CapExceededError,
    InapplicableError,
    InfConvResult,
    Witness,
    descent_certificate,
    probe_scale,
)
from .thone import is_quasi_concave

TREE_CAP = 200_000
FEASIBLE_TOL = 1e-12


def tree_count(K: int, Lv: int) -> int:
    return K ** (Lv - 1) * Lv ** (K - 1)


@lru_cache(maxsize=64)
def spanning_trees(K: int, Lv: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge lists of all spanning trees of the complete ``K x Lv`` bipartite graph.

    Returns ``(edges, inverses)``: ``edges[t]`` holds flat indices
    ``k * Lv + l`` and ``inverses[t]`` maps the right-hand side
    ``(row sums, first Lv - 1 column sums)`` to the flows on those edges.
    """
    n = K + Lv
    E = K * Lv
    need = n - 1
    found: list[tuple[int, ...]] = []

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def rec(i, chosen, parent):
        if len(chosen) == need:
            found.append(tuple(chosen))
            return
        if len(chosen) + (E - i) < need:
            return
        k, l = divmod(i, Lv)
        ra, rb = find(parent, k), find(parent, K + l)
        if ra != rb:
            p = list(parent)
            p[ra] = rb
            rec(i + 1, chosen + [i], p)
        rec(i + 1, chosen, parent)

    rec(0, [], list(range(n)))
    edges = np.array(found, dtype=int).reshape(len(found), need)
    A = np.zeros((len(found), need, need))
    for t, tree in enumerate(found):
        for j, e in enumerate(tree):
            k, l = divmod(e, Lv)
            A[t, k, j] = 1.0
            if l < Lv - 1:
                A[t, K + l, j] = 1.0
    return edges, np.linalg.inv(A)


def coupling_vertices(w1: np.ndarray, masses: np.ndarray, cap: int = TREE_CAP) -> np.ndarray:
    """Basic plans ``pi[t, k, l]`` with row sums ``w1`` and column sums ``masses``.

    Infeasible bases come back as NaN rows so that row ``t`` always means the
    same tree for a given shape.
    """
    K, Lv = w1.size, masses.size
    if tree_count(K, Lv) > cap:
        raise CapExceededError(f"{tree_count(K, Lv)} couplings exceed the cap of {cap}")
    edges, inv = spanning_trees(K, Lv)
    rhs = np.concatenate([w1, masses[:-1]])
    flows = inv @ rhs
    ok = np.all(flows >= -FEASIBLE_TOL, axis=1)
    pi = np.zeros((edges.shape[0], K * Lv))
    np.put_along_axis(pi, edges, np.maximum(flows, 0.0), axis=1)
    pi[~ok] = np.nan
    return pi.reshape(-1, K, Lv)


def levels_at(L: StepLambda, x: float, y: float) -> tuple[np.ndarray, np.ndarray]:
    """Values and first-belief masses of the quantile function of ``cdf_transform``."""
    F = cdf_transform(L, x, y)
    jumps = np.diff(np.asarray(F.values))
    z = np.asarray(F.breakpoints, dtype=float)
    keep = jumps > EPS
    return z[keep], jumps[keep]


class CouplingObjective:
    """``x + rho(X - Z)`` for stacks of plans between atoms and level values."""

    def __init__(self, space: FiniteSpace, q1_id: str, agent2: MeasureSpec, X, bps, M: float):
        self.v = values_of(X, space)
        self.w1 = space.weights(q1_id)
        self.w2 = effective_weights(space, agent2)
        self.pos = np.flatnonzero(self.w1 > EPS)
        self.null = np.flatnonzero(self.w1 <= EPS)
        self.agent2 = agent2
        self.knots = tuple(agent2.shift_knots)
        self.bps = tuple(bps)
        self.M = M

    def y_probe(self, x: float, scale: float) -> float:
        """A top level that leaves the second agent below every other outcome and knot."""
        lo = float(self.v.min())
        low = min([lo - x] + [lo - b for b in self.bps] + list(self.knots))
        return float(self.v.max()) - low + 1.0 + scale * self.M

    def rho(self, pi: np.ndarray, z: np.ndarray) -> np.ndarray:
        """``pi`` has shape ``(R, |pos|, |z|)``; NaN rows evaluate to ``+inf``."""
        R = pi.shape[0]
        bad = np.isnan(pi).any(axis=(1, 2))
        safe = np.where(bad[:, None, None], pi[np.argmin(bad)] if (~bad).any() else 0.0, pi)
        vp, w1p, w2p = self.v[self.pos], self.w1[self.pos], self.w2[self.pos]
        vals = np.broadcast_to((vp[:, None] - z[None, :]).ravel(), (R, vp.size * z.size))
        probs = (safe * (w2p / w1p)[None, :, None]).reshape(R, -1)
        if self.null.size:
            # atoms the first agent ignores are handed the top level
            vals = np.concatenate([vals, np.broadcast_to(self.v[self.null] - z[-1], (R, self.null.size))], axis=1)
            probs = np.concatenate([probs, np.broadcast_to(self.w2[self.null], (R, self.null.size))], axis=1)
        out = batch(self.agent2, np.ascontiguousarray(vals), np.ascontiguousarray(probs))
        out[bad] = np.inf
        return out

    def evaluate(self, x: float, plans):
        """``plans(z, masses)`` returns the plan stack for the given levels."""
        z1, m1 = self.levels(x, 1.0)
        pi = plans(z1, m1)
        r1 = self.rho(pi, z1)
        z4, _ = self.levels(x, 4.0)
        r4 = self.rho(pi, z4)
        desc = np.isneginf(r1) | (r4 < r1 - TOL)
        return x + r1, desc

    def levels(self, x, scale):
        raise NotImplementedError


def _witness(space: FiniteSpace, obj: CouplingObjective, pi: np.ndarray, z: np.ndarray) -> Witness:
    """Split atoms by the plan; the first agent holds the level, the second the rest."""
    Lv = z.size
    mem = np.zeros((Lv, space.n))
    mem[:, obj.pos] = (pi / obj.w1[obj.pos][:, None]).T
    mem[-1, obj.null] = 1.0
    mem = np.clip(mem, 0.0, 1.0)
    mem[-1] = np.clip(1.0 - mem[:-1].sum(axis=0), 0.0, 1.0)
    sets = tuple(EventSet(m) for m in mem)
    refined, owner = partition_refinement(space, sets)
    x1 = z[owner]
    x2 = lift(refined, obj.v) - x1
    return Witness(refined, (x1, x2), (float(z[0]), float(z[-1])), sets)


def _finish(space, q1_id, L, agent2, obj: CouplingObjective, plans_at, found: ScanResult,
            method: str, diagnostics: dict) -> InfConvResult:
    agents = (MeasureSpec("lambda_var_plus", q1_id, lam=L), agent2)
    diagnostics = dict(diagnostics, evaluations=found.evaluations, found_at=found.where)
    if found.value == NEG_INF:
        d = found.descent
        x = float(d["x"]) if d["parameter"] == "inner" else float(found.x)
        if d["parameter"] == "inner":
            probes = []
            for s in (1.0, 4.0):
                z, m = obj.levels(x, s)
                pi = plans_at(x)[found.row][None]
                probes.append((s * obj.M, float(x + obj.rho(pi, z)[0])))
            parameter = "y"
        else:
            probes, parameter = d["probes"], "x"
        cert = descent_certificate("descent", probes, descending=True, parameter=parameter, x=x)
        res = InfConvResult(NEG_INF, method, None, {}, diagnostics, cert)
        res.agents = agents
        return res
    x = float(found.x)
    if not found.attained:
        diagnostics["attained"] = False
        res = InfConvResult(found.value, method, None, {"x_star": x}, diagnostics)
        res.agents = agents
        return res
    z, _ = obj.levels(x, 1.0)
    pi = plans_at(x)[found.row]
    diagnostics["attained"] = True
    params = {"x_star": x, "y_star": float(z[-1]), "levels": z.tolist(), "plan": pi.tolist()}
    res = InfConvResult(found.value, method, _witness(space, obj, pi, z), params, diagnostics)
    res.agents = agents
    return res


def _lattice(v: np.ndarray, bps, knots) -> list[float]:
    pts = set(float(b) for b in bps) | set(float(t) for t in v)
    for b in bps:
        pts.update(float(a - c + b) for a in v for c in v)
    for c in tuple(knots) + (0.0,):
        pts.update(float(t) - c for t in v)
    return sorted(pts)


class _PlusObjective(CouplingObjective):
    def __init__(self, space, q1_id, L, agent2, X, M):
        super().__init__(space, q1_id, agent2, X, L.breakpoints, M)
        self.L = L

    def levels(self, x, scale):
        return levels_at(self.L, x, self.y_probe(x, scale))


def infconv_lvarplus_rho(
    space: FiniteSpace, q1_id: str, L: StepLambda, agent2: MeasureSpec, X, cap: int = TREE_CAP
) -> InfConvResult:
    """``Lambda-VaR+^{Q1} box rho^{Q2}`` by enumerating vertex couplings at every lattice ``x``."""
    check_bounds(L)
    v = values_of(X, space)
    knots = agent2.shift_knots
    M = probe_scale(v, [L], extra=knots)
    obj = _PlusObjective(space, q1_id, L, agent2, v, M)
    w1p = obj.w1[obj.pos]
    K = obj.pos.size
    starts = [min(L.breakpoints, default=0.0) - 1.0] + list(L.breakpoints)
    widest = max(obj.levels(x, 1.0)[0].size for x in starts)
    if tree_count(K, widest) > cap:
        lo, hi = _bounds(obj, v, L, knots)
        raise CapExceededError(
            f"{tree_count(K, widest)} couplings exceed the cap of {cap}", lower=lo, upper=hi
        )

    def plans(z, m):
        return coupling_vertices(w1p, m, cap)

    def plans_at(x):
        z, m = obj.levels(x, 1.0)
        return plans(z, m)

    found = scan(_lattice(v, L.breakpoints, knots), lambda x: obj.evaluate(x, plans), M)
    diag = {"exact_coupling_search": is_quasi_concave(agent2), "coupling_search": "spanning trees"}
    return _finish(space, q1_id, L, agent2, obj, plans_at, found, "thfour", diag)


def monotone_plans(w1: np.ndarray, masses: np.ndarray, order: np.ndarray) -> np.ndarray:
    """North-west corner plan filling levels in order along the atom ordering ``order``."""
    K, Lv = w1.size, masses.size
    pi = np.zeros((K, Lv))
    left = masses.astype(float).copy()
    l = 0
    for k in order:
        need = w1[k]
        while need > EPS and l < Lv:
            take = min(need, left[l])
            pi[k, l] += take
            need -= take
            left[l] -= take
            if left[l] <= EPS:
                l += 1
        if need > EPS:
            pi[k, Lv - 1] += need
    return pi


def _bounds(obj: CouplingObjective, v, L, knots) -> tuple[float, float]:
    """Upper bound from the two monotone plans; lower bound is not available."""
    vp = v[obj.pos]
    orders = (np.argsort(vp, kind="stable"), np.argsort(-vp, kind="stable"))
    w1p = obj.w1[obj.pos]

    def plans(z, m):
        return np.stack([monotone_plans(w1p, m, o) for o in orders])

    found = scan(_lattice(v, L.breakpoints, knots), lambda x: obj.evaluate(x, plans), obj.M)
    return NEG_INF, float(found.value)


# ------------------------------------------------------------ two-level Lambda


def step_shape(L: StepLambda) -> tuple[float, float, float]:
    """``(x1, lam1, lam2)`` for ``Lambda = (1 - lam1) 1_{z < x1} + (1 - lam2) 1_{z >= x1}``."""
    if not L.breakpoints:
        # lam1 = lam2: the middle part is empty and the breakpoint is irrelevant
        lam = 1.0 - L.values[0]
        if not 0.0 < lam < 1.0:
            raise InapplicableError(f"need 0 < lam1 < 1, got {lam}")
        return 0.0, lam, lam
    if len(L.breakpoints) != 1:
        raise InapplicableError(f"expected one breakpoint, got {len(L.breakpoints)}")
    lam1, lam2 = 1.0 - L.values[0], 1.0 - L.values[1]
    if not (0.0 < lam1 < lam2 < 1.0):
        raise InapplicableError(f"need 0 < lam1 < lam2 < 1, got lam1={lam1}, lam2={lam2}")
    return float(L.breakpoints[0]), lam1, lam2


def set_pairs(w1: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Extreme memberships of three disjoint parts with first-belief masses ``masses``.

    Every atom sits crisply in one part, except either a single atom spread
    over the parts or two atoms each split between two parts that share
    exactly one part.  Returns plans of shape ``(R, K, 3)``.
    """
    K = w1.size
    out = []
    # one free atom: the others fixed, the free atom absorbs whatever is missing
    for j in range(K):
        others = [k for k in range(K) if k != j]
        for assign in itertools.product(range(3), repeat=len(others)):
            c = np.zeros(3)
            for k, p in zip(others, assign):
                c[p] += w1[k]
            t = (masses - c) / w1[j]
            if np.all(t >= -FEASIBLE_TOL) and np.all(t <= 1.0 + FEASIBLE_TOL):
                pi = np.zeros((K, 3))
                for k, p in zip(others, assign):
                    pi[k, p] = w1[k]
                pi[j] = np.clip(t, 0.0, 1.0) * w1[j]
                out.append(pi)
    # two atoms split between two parts each
    for j, i in itertools.combinations(range(K), 2):
        others = [k for k in range(K) if k not in (j, i)]
        for pj, pi_ in itertools.permutations(range(3), 2):
            shared = 3 - pj - pi_
            for assign in itertools.product(range(3), repeat=len(others)):
                c = np.zeros(3)
                for k, p in zip(others, assign):
                    c[p] += w1[k]
                a = (masses[pj] - c[pj]) / w1[j]
                b = (masses[pi_] - c[pi_]) / w1[i]
                if -FEASIBLE_TOL <= a <= 1 + FEASIBLE_TOL and -FEASIBLE_TOL <= b <= 1 + FEASIBLE_TOL:
                    a, b = min(max(a, 0.0), 1.0), min(max(b, 0.0), 1.0)
                    plan = np.zeros((K, 3))
                    for k, p in zip(others, assign):
                        plan[k, p] = w1[k]
                    plan[j, pj], plan[j, shared] = a * w1[j], (1 - a) * w1[j]
                    plan[i, pi_], plan[i, shared] = b * w1[i], (1 - b) * w1[i]
                    out.append(plan)
    if not out:
        return np.zeros((0, K, 3))
    return np.unique(np.round(np.stack(out), 15), axis=0)


class _StepObjective(CouplingObjective):
    def __init__(self, space, q1_id, L, agent2, X, M):
        super().__init__(space, q1_id, agent2, X, L.breakpoints, M)
        self.x1, self.lam1, self.lam2 = step_shape(L)

    def levels(self, x, scale):
        # levels x, x v x1 and y with masses lam1, lam2 - lam1, 1 - lam2
        y = max(self.y_probe(x, scale), max(x, self.x1))
        z = np.array([x, max(x, self.x1), y])
        return z, np.array([self.lam1, self.lam2 - self.lam1, 1.0 - self.lam2])


def infconv_lvarplus_step(
    space: FiniteSpace, q1_id: str, L: StepLambda, agent2: MeasureSpec, X, cap: int = TREE_CAP
) -> InfConvResult:
    """Two-level ``Lambda``: search ``x``, ``y`` and a pair of disjoint sets directly."""
    check_bounds(L)
    v = values_of(X, space)
    knots = agent2.shift_knots
    M = probe_scale(v, [L], extra=knots)
    obj = _StepObjective(space, q1_id, L, agent2, v, M)
    w1p = obj.w1[obj.pos]
    K = obj.pos.size
    size = 3**K * (K + 6 * K * K)
    if size > cap:
        raise CapExceededError(f"about {size} set pairs exceed the cap of {cap}")
    cache: dict[bool, np.ndarray] = {}

    def plans(z, m):
        # masses never change; only whether x sits left of x1 matters for z
        if "all" not in cache:
            cache["all"] = set_pairs(w1p, m)
        return cache["all"]

    def plans_at(x):
        z, m = obj.levels(x, 1.0)
        return plans(z, m)

    found = scan(_lattice(v, L.breakpoints, knots), lambda x: obj.evaluate(x, plans), M)
    diag = {"exact_coupling_search": is_quasi_concave(agent2), "coupling_search": "set pairs"}
    return _finish(space, q1_id, L, agent2, obj, plans_at, found, "thfour-step", diag)


__all__ = [
    "CouplingObjective",
    "TREE_CAP",
    "coupling_vertices",
    "infconv_lvarplus_rho",
    "infconv_lvarplus_step",
    "levels_at",
    "monotone_plans",
    "set_pairs",
    "spanning_trees",
    "step_shape",
    "tree_count",
]
