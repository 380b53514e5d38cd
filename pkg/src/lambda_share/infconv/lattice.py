"""Exact minimisation of objectives that are affine between lattice points.

The engines below reduce to ``inf_x F(x)`` where, for every candidate
structure ``r`` (a set, a coupling, ...), ``x -> F_r(x)`` is affine on each
open interval between consecutive lattice points.  ``F = min_r F_r`` is then
minimised by looking at the lattice points themselves, at both one-sided
limits of every open interval (obtained by extrapolating two interior
evaluations row by row) and at probes far out on the two unbounded ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TOL = 1e-9

# evaluate(x) -> (objective per row, row descends when the inner probe is pushed)
Evaluator = Callable[[float], tuple[np.ndarray, np.ndarray]]


@dataclass
class ScanResult:
    value: float
    x: float | None = None
    row: int | None = None
    attained: bool = True
    where: str = "point"
    descent: dict | None = None
    evaluations: int = 0
    extra: dict = field(default_factory=dict)


def lattice_points(points) -> np.ndarray:
    return np.unique(np.asarray([float(p) for p in points if math.isfinite(p)]))


def scan(points, evaluate: Evaluator, M: float, tol: float = TOL) -> ScanResult:
    """Minimise ``min_r F_r(x)`` over the real line.

    ``points`` must contain every ``x`` where some ``F_r`` may fail to be
    affine.  Returns ``-inf`` as soon as one row descends, either in the
    inner probe or along an unbounded end of the line.
    """
    pts = lattice_points(points)
    if pts.size == 0:
        pts = np.array([0.0])
    # (value, x, row, attained, where, rank): rank 0 lattice point, 1 interior, 2 far probe
    cands: list[tuple[float, float, int, bool, str, int]] = []
    count = 0

    def run(x: float):
        nonlocal count
        count += 1
        obj, desc = evaluate(x)
        obj = np.asarray(obj, dtype=float)
        desc = np.asarray(desc, dtype=bool)
        return obj, desc

    def inner_descent(x, obj, desc):
        if obj.size and desc.any():
            r = int(np.flatnonzero(desc)[0])
            return ScanResult(-math.inf, x, r, False, "inner descent",
                              {"parameter": "inner", "x": x, "row": r}, count)
        return None

    def take_point(x, obj, rank):
        if obj.size:
            r = int(np.argmin(obj))
            if math.isfinite(obj[r]):
                cands.append((float(obj[r]), x, r, True, "point", rank))

    def take_limits(a, b, pa, pb, oa, ob):
        """Rows are affine on (a, b); ``oa``/``ob`` are values at ``pa < pb``."""
        if not oa.size:
            return
        ok = np.isfinite(oa) & np.isfinite(ob)
        if pb > pa:
            slope = np.where(ok, (np.where(ok, ob, 0.0) - np.where(ok, oa, 0.0)) / (pb - pa), 0.0)
        else:
            # interval too narrow for two distinct probes
            slope = np.zeros_like(oa)
        if math.isfinite(a):
            lim = np.where(ok, oa - slope * (pa - a), np.inf)
            r = int(np.argmin(lim))
            cands.append((float(lim[r]), a, r, False, "right limit", 1))
        if math.isfinite(b):
            lim = np.where(ok, ob + slope * (b - pb), np.inf)
            r = int(np.argmin(lim))
            cands.append((float(lim[r]), b, r, False, "left limit", 1))

    for x in pts:
        obj, desc = run(float(x))
        hit = inner_descent(float(x), obj, desc)
        if hit:
            return hit
        take_point(float(x), obj, 0)
    for a, b in zip(pts[:-1], pts[1:]):
        w = b - a
        p1, p2 = a + w / 3.0, a + 2.0 * w / 3.0
        o1, d1 = run(p1)
        o2, d2 = run(p2)
        for p, o, d in ((p1, o1, d1), (p2, o2, d2)):
            hit = inner_descent(p, o, d)
            if hit:
                return hit
            take_point(p, o, 1)
        take_limits(a, b, p1, p2, o1, o2)
    # unbounded ends: two probes each, any row still falling means -inf
    for side in (-1.0, 1.0):
        edge = pts[0] if side < 0 else pts[-1]
        near, far = edge + side * M, edge + side * 4.0 * M
        on, dn = run(near)
        of, df = run(far)
        for p, o, d in ((near, on, dn), (far, of, df)):
            hit = inner_descent(p, o, d)
            if hit:
                return hit
            take_point(p, o, 2)
        if on.size:
            falling = np.isfinite(on) & (of < on - tol)
            if falling.any():
                r = int(np.flatnonzero(falling)[0])
                probes = [(M, float(on[r])), (4.0 * M, float(of[r]))]
                return ScanResult(-math.inf, far, r, False, "outer descent",
                                  {"parameter": "x", "direction": side, "row": r, "probes": probes}, count)
        if side < 0:
            take_limits(-math.inf, edge, far, near, of, on)
        else:
            take_limits(edge, math.inf, near, far, on, of)
    if not cands:
        return ScanResult(math.inf, evaluations=count)
    best = min(c[0] for c in cands)
    close = [c for c in cands if c[0] <= best + tol]
    # prefer a realised point, then lattice points over probes, then the smallest x
    close.sort(key=lambda c: (not c[3], c[5], c[1]))
    v, x, r, att, where, _ = close[0]
    return ScanResult(v, x, r, att, where, None, count)
