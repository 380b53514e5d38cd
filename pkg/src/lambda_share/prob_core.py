"""Finite probability spaces carrying several measures at once.

Atoms are indivisible in the data model, but event sets may own a fraction
of an atom.  Fractional membership plus :func:`refine` lets a finite space
stand in for an atomless one: a set of any prescribed probability can be
written down exactly and, when an allocation has to be realised as a plain
random variable, the atoms are split so every set becomes crisp.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

EPS = 1e-12


class ProbabilityError(ValueError):
    """Base class for invalid probabilistic input."""


class UnknownMeasureError(ProbabilityError, KeyError):
    pass


class ZeroMassError(ProbabilityError):
    pass


class AbsoluteContinuityError(ProbabilityError):
    def __init__(self, atom_index: int, atom_id: str, num_id: str, den_id: str):
        self.atom_index = atom_index
        self.atom_id = atom_id
        super().__init__(
            f"measure {num_id!r} is not absolutely continuous w.r.t. {den_id!r}: "
            f"atom {atom_index + 1} ({atom_id!r}) has zero {den_id!r}-mass but positive {num_id!r}-mass"
        )


def _frozen(a: Iterable[float]) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """Ordered atoms and a named family of probability vectors on them.

    ``parents`` is set by refinement and maps each atom to the atom of the
    space it was split from.
    """

    atoms: tuple[str, ...]
    measures: Mapping[str, np.ndarray]
    reference: str | None = None
    parents: tuple[int, ...] | None = None

    def __post_init__(self):
        atoms = tuple(str(a) for a in self.atoms)
        if not atoms:
            raise ProbabilityError("a space needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise ProbabilityError("atom ids must be unique")
        object.__setattr__(self, "atoms", atoms)
        if not self.measures:
            raise ProbabilityError("a space needs at least one measure")
        frozen = {}
        for name, w in self.measures.items():
            arr = _frozen(w)
            if arr.shape != (len(atoms),):
                raise ProbabilityError(
                    f"measure {name!r} has {arr.size} weights for {len(atoms)} atoms"
                )
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ProbabilityError(f"measure {name!r} has a negative or non-finite weight")
            total = float(arr.sum())
            if abs(total - 1.0) > EPS:
                raise ProbabilityError(f"measure {name!r} sums to {total!r}, not 1")
            frozen[str(name)] = arr
        object.__setattr__(self, "measures", frozen)
        ref = self.reference
        if ref is None:
            ref = next((m for m, w in frozen.items() if np.all(w > 0)), None)
            if ref is None:
                raise ProbabilityError("no measure is strictly positive on every atom")
        elif ref not in frozen:
            raise UnknownMeasureError(ref)
        elif not np.all(frozen[ref] > 0):
            raise ProbabilityError(f"reference measure {ref!r} vanishes on some atom")
        object.__setattr__(self, "reference", ref)
        if self.parents is not None:
            object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))

    @classmethod
    def uniform(cls, n: int, name: str = "P") -> "FiniteSpace":
        return cls(tuple(f"w{i + 1}" for i in range(n)), {name: np.full(n, 1.0 / n)})

    @property
    def n(self) -> int:
        return len(self.atoms)

    def weights(self, measure_id: str) -> np.ndarray:
        try:
            return self.measures[measure_id]
        except KeyError:
            raise UnknownMeasureError(measure_id) from None

    def with_measure(self, measure_id: str, weights: Sequence[float]) -> "FiniteSpace":
        measures = dict(self.measures)
        measures[measure_id] = np.asarray(weights, dtype=float)
        return FiniteSpace(self.atoms, measures, self.reference, self.parents)


@dataclass(frozen=True, eq=False)
class RandomVariable:
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise ProbabilityError("a random variable is a finite real vector")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size


def values_of(X, space: FiniteSpace | None = None) -> np.ndarray:
    arr = X.values if isinstance(X, RandomVariable) else np.asarray(X, dtype=float)
    if space is not None and arr.shape != (space.n,):
        raise ProbabilityError(f"random variable has {arr.size} values for {space.n} atoms")
    return arr


@dataclass(frozen=True, eq=False)
class EventSet:
    """Per-atom membership in [0, 1]; a fraction owns that share of the atom."""

    membership: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.membership)
        if arr.ndim != 1:
            raise ProbabilityError("event membership must be a vector")
        if np.any(arr < -EPS) or np.any(arr > 1 + EPS):
            raise ProbabilityError("event membership must lie in [0, 1]")
        arr = _frozen(np.clip(arr, 0.0, 1.0))
        object.__setattr__(self, "membership", arr)

    @classmethod
    def full(cls, n: int) -> "EventSet":
        return cls(np.ones(n))

    @classmethod
    def empty(cls, n: int) -> "EventSet":
        return cls(np.zeros(n))

    @classmethod
    def from_atoms(cls, n: int, indices: Iterable[int]) -> "EventSet":
        m = np.zeros(n)
        m[list(indices)] = 1.0
        return cls(m)

    @property
    def is_crisp(self) -> bool:
        m = self.membership
        return bool(np.all((m <= EPS) | (m >= 1 - EPS)))

    def prob(self, space: FiniteSpace, measure_id: str) -> float:
        return float(self.membership @ space.weights(measure_id))

    def complement(self) -> "EventSet":
        return EventSet(1.0 - self.membership)

    def intersect(self, other: "EventSet") -> "EventSet":
        # exact for crisp sets; fractional inputs are treated as independent shares
        return EventSet(self.membership * other.membership)

    def union(self, other: "EventSet") -> "EventSet":
        return EventSet(np.minimum(1.0, self.membership + other.membership))

    def __len__(self) -> int:
        return self.membership.size


@dataclass(frozen=True, eq=False)
class AtomOrdering:
    """Realisation of a uniform variable: atom ``k`` owns ``(lower[k], upper[k]]``."""

    order: tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray
    fraction: float = 1.0

    def interval_event(self, lo: float, hi: float) -> EventSet:
        """The event ``{lo < U <= hi}`` as fractional membership."""
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        width = self.upper - self.lower
        overlap = np.clip(np.minimum(self.upper, hi) - np.maximum(self.lower, lo), 0.0, None)
        member = np.zeros_like(width)
        pos = width > 0
        member[pos] = overlap[pos] / width[pos]
        # zero-width atoms sit at a single point of the unit interval
        point = ~pos
        member[point] = ((self.upper[point] > lo) & (self.upper[point] <= hi)).astype(float)
        if hi <= lo:
            member[:] = 0.0
        member[np.abs(member - 1.0) <= 1e-9] = 1.0
        member[member <= 1e-15] = 0.0
        return EventSet(member)


def _sorted_order(values: np.ndarray) -> np.ndarray:
    return np.argsort(values, kind="stable")


def cdf(space: FiniteSpace, measure_id: str, X, x: float) -> float:
    w = space.weights(measure_id)
    v = values_of(X, space)
    return float(w[v <= x].sum())


def left_quantile(space: FiniteSpace, measure_id: str, X, p: float) -> float:
    """Smallest atom value whose distribution function reaches ``p``."""
    if not (0.0 < p <= 1.0):
        raise ProbabilityError(f"quantile level {p!r} outside (0, 1]")
    w = space.weights(measure_id)
    v = values_of(X, space)
    order = _sorted_order(v)
    cum = np.cumsum(w[order])
    idx = int(np.searchsorted(cum, p - EPS, side="left"))
    idx = min(idx, v.size - 1)
    return float(v[order][idx])


def conditional_measure(
    space: FiniteSpace, measure_id: str, B: EventSet, new_id: str | None = None
) -> tuple[FiniteSpace, str]:
    """Register ``measure(. | B)`` and return the extended space with its id."""
    w = space.weights(measure_id)
    mass = float(B.membership @ w)
    if mass <= EPS:
        raise ZeroMassError(f"conditioning event has zero {measure_id!r}-mass")
    if new_id is None:
        base = f"{measure_id}|B"
        new_id, k = base, 1
        while new_id in space.measures:
            k += 1
            new_id = f"{base}{k}"
    cond = B.membership * w / mass
    cond = cond / cond.sum()
    return space.with_measure(new_id, cond), new_id


def radon_nikodym(space: FiniteSpace, num_id: str, den_id: str) -> RandomVariable:
    num = space.weights(num_id)
    den = space.weights(den_id)
    eta = np.zeros(space.n)
    for k in range(space.n):
        if den[k] > 0:
            eta[k] = num[k] / den[k]
        elif num[k] > EPS:
            raise AbsoluteContinuityError(k, space.atoms[k], num_id, den_id)
    return RandomVariable(eta)


def uniform_transform(space: FiniteSpace, measure_id: str, X, tie_break=None) -> AtomOrdering:
    """Atoms laid out on (0, 1] in ascending ``X``; ties follow ``tie_break``, then index."""
    w = space.weights(measure_id)
    v = values_of(X, space)
    if tie_break is None:
        order = _sorted_order(v)
    else:
        order = np.lexsort((values_of(tie_break, space), v))
    cum = np.concatenate([[0.0], np.cumsum(w[order])])
    cum[-1] = 1.0
    lower = np.empty(space.n)
    upper = np.empty(space.n)
    lower[order] = cum[:-1]
    upper[order] = cum[1:]
    return AtomOrdering(tuple(int(k) for k in order), lower, upper)


def split_atoms(space: FiniteSpace, pieces: Sequence[Sequence[float]]) -> FiniteSpace:
    """Split atom ``k`` into ``len(pieces[k])`` atoms with the given shares.

    Shares of each atom must sum to one; every measure is split in the same
    proportions, so distributions of lifted variables are unchanged.
    """
    atoms: list[str] = []
    parents: list[int] = []
    shares: list[float] = []
    for k, fr in enumerate(pieces):
        fr = [float(f) for f in fr]
        if not fr or abs(sum(fr) - 1.0) > 1e-9 or min(fr) <= 0:
            raise ProbabilityError(f"invalid split shares for atom {k + 1}")
        if len(fr) == 1:
            atoms.append(space.atoms[k])
        else:
            atoms.extend(f"{space.atoms[k]}.{j + 1}" for j in range(len(fr)))
        parents.extend([k] * len(fr))
        shares.extend(fr)
    sh = np.array(shares)
    idx = np.array(parents)
    measures = {}
    for name, w in space.measures.items():
        nw = w[idx] * sh
        measures[name] = nw / nw.sum()
    return FiniteSpace(tuple(atoms), measures, space.reference, tuple(parents))


def lift(refined: FiniteSpace, X) -> np.ndarray:
    """Values of a variable of the parent space on the refined atoms."""
    if refined.parents is None:
        return values_of(X).copy()
    return values_of(X)[list(refined.parents)]


def refine(
    space: FiniteSpace, levels: Iterable[float], measure_id: str, X=None
) -> FiniteSpace:
    """Split atoms so each level is a partial sum along the ordering of ``X``.

    Without ``X`` atoms are taken in index order.
    """
    w = space.weights(measure_id)
    v = np.arange(space.n, dtype=float) if X is None else values_of(X, space)
    ordering = uniform_transform(space, measure_id, v)
    cuts: dict[int, set[float]] = {}
    for level in levels:
        level = float(level)
        if not (0.0 <= level <= 1.0):
            raise ProbabilityError(f"refinement level {level!r} outside [0, 1]")
        for k in ordering.order:
            lo, hi = ordering.lower[k], ordering.upper[k]
            if lo + EPS < level < hi - EPS:
                cuts.setdefault(k, set()).add((level - lo) / w[k])
                break
    if not cuts:
        return space
    pieces = []
    for k in range(space.n):
        if k not in cuts:
            pieces.append([1.0])
            continue
        pts = sorted(cuts[k])
        edges = [0.0] + pts + [1.0]
        pieces.append([b - a for a, b in zip(edges[:-1], edges[1:])])
    return split_atoms(space, pieces)


def tail_event(
    space: FiniteSpace, measure_id: str, X, x: float, mass: float, ordering_var
) -> EventSet:
    """Part of ``{X > x}`` of exact ``mass``, filled in ascending ``ordering_var``."""
    w = space.weights(measure_id)
    v = values_of(X, space)
    tail = v > x
    available = float(w[tail].sum())
    if mass < -EPS or mass > available + EPS:
        raise ProbabilityError(
            f"requested mass {mass!r} exceeds the tail mass {available!r} of {{X > {x!r}}}"
        )
    key = values_of(ordering_var, space)
    member = np.zeros(space.n)
    remaining = max(float(mass), 0.0)
    for k in _sorted_order(key):
        if not tail[k]:
            continue
        if remaining <= EPS:
            break
        if w[k] <= remaining + EPS:
            member[k] = 1.0
            remaining -= w[k]
        else:
            member[k] = remaining / w[k]
            remaining = 0.0
    return EventSet(member)


def partition_refinement(
    space: FiniteSpace, parts: Sequence[EventSet]
) -> tuple[FiniteSpace, np.ndarray]:
    """Split atoms so that every event of a (sub)partition becomes crisp.

    Returns the refined space and, for each new atom, the index of the part
    it belongs to (``-1`` for the uncovered remainder).
    """
    mem = np.array([p.membership for p in parts]) if parts else np.zeros((0, space.n))
    total = mem.sum(axis=0)
    if np.any(total > 1 + 1e-9):
        raise ProbabilityError("events overlap; expected a partition")
    pieces, owners = [], []
    for k in range(space.n):
        fr, ow = [], []
        for j in range(len(parts)):
            if mem[j, k] > 1e-15:
                fr.append(mem[j, k])
                ow.append(j)
        rest = 1.0 - sum(fr)
        if rest > 1e-12 or not fr:
            fr.append(max(rest, 0.0))
            ow.append(-1)
        s = sum(fr)
        pieces.append([f / s for f in fr])
        owners.extend(ow)
    refined = split_atoms(space, pieces)
    return refined, np.array(owners, dtype=int)


__all__ = [
    "EPS",
    "AbsoluteContinuityError",
    "AtomOrdering",
    "EventSet",
    "FiniteSpace",
    "ProbabilityError",
    "RandomVariable",
    "UnknownMeasureError",
    "ZeroMassError",
    "cdf",
    "conditional_measure",
    "left_quantile",
    "lift",
    "partition_refinement",
    "radon_nikodym",
    "refine",
    "split_atoms",
    "tail_event",
    "uniform_transform",
    "values_of",
]
