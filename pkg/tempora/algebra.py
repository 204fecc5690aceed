# tempora/algebra.py
"""Allen's 13 interval relations, relation sets and their composition.

The composition (transitivity) table is never written out by hand: it is
derived on first use by sweeping every triple of intervals whose endpoints
lie in ``0..ORACLE_MAX``. `compose_oracle` answers the same question one
pair at a time and is what tests use to check the sweep.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import cache, lru_cache
from typing import Iterable, Iterator

from .errors import IntervalError, RelationError

ORACLE_MAX = 7  # endpoints 0..7: enough distinct points for any 3-interval ordering


class AllenRelation(Enum):
    BEFORE = "before"
    AFTER = "after"
    MEETS = "meets"
    MET_BY = "met_by"
    OVERLAPS = "overlaps"
    OVERLAPPED_BY = "overlapped_by"
    STARTS = "starts"
    STARTED_BY = "started_by"
    DURING = "during"
    CONTAINS = "contains"
    FINISHES = "finishes"
    FINISHED_BY = "finished_by"
    EQUALS = "equals"

    @property
    def bit(self) -> int:
        return 1 << _INDEX[self]

    @property
    def converse(self) -> "AllenRelation":
        return _CONVERSE[self]

    @classmethod
    def parse(cls, name: str) -> "AllenRelation":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise RelationError(f"unknown relation: {name!r}", relation=name) from None

    def __str__(self) -> str:
        return self.value


RELATIONS: tuple[AllenRelation, ...] = tuple(AllenRelation)
_INDEX = {r: i for i, r in enumerate(RELATIONS)}

_PAIRS = [
    (AllenRelation.BEFORE, AllenRelation.AFTER),
    (AllenRelation.MEETS, AllenRelation.MET_BY),
    (AllenRelation.OVERLAPS, AllenRelation.OVERLAPPED_BY),
    (AllenRelation.STARTS, AllenRelation.STARTED_BY),
    (AllenRelation.DURING, AllenRelation.CONTAINS),
    (AllenRelation.FINISHES, AllenRelation.FINISHED_BY),
]
_CONVERSE = {AllenRelation.EQUALS: AllenRelation.EQUALS}
for _a, _b in _PAIRS:
    _CONVERSE[_a] = _b
    _CONVERSE[_b] = _a

FULL_MASK = (1 << len(RELATIONS)) - 1


# ---- Relation sets ----------------------------------------------------------
@dataclass(frozen=True, slots=True)
class RelationSet:
    """A disjunction of basic relations, stored as a 13-bit mask.

    Empty means inconsistent; full means nothing is known.
    """
    mask: int = 0

    def __post_init__(self):
        if not 0 <= self.mask <= FULL_MASK:
            raise RelationError(f"relation mask out of range: {self.mask}", mask=self.mask)

    @classmethod
    def of(cls, *relations: AllenRelation) -> "RelationSet":
        m = 0
        for r in relations:
            m |= r.bit
        return cls(m)

    @classmethod
    def full(cls) -> "RelationSet":
        return FULL

    @classmethod
    def empty(cls) -> "RelationSet":
        return EMPTY

    @classmethod
    def parse(cls, text: str | Iterable[str]) -> "RelationSet":
        """Accepts `before,meets`, a list of names, or `full` / `empty`."""
        if isinstance(text, str):
            t = text.strip().lower()
            if t in ("full", "*", "all"):
                return FULL
            if t in ("", "empty"):
                return EMPTY
            names = t.split(",")
        else:
            names = list(text)
        return cls.of(*(AllenRelation.parse(n) for n in names))

    # set algebra
    def __or__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet(self.mask | other.mask)

    def __and__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet(self.mask & other.mask)

    def __le__(self, other: "RelationSet") -> bool:
        return self.mask & ~other.mask == 0

    def __ge__(self, other: "RelationSet") -> bool:
        return other <= self

    def __contains__(self, r: AllenRelation) -> bool:
        return bool(self.mask & r.bit)

    def __iter__(self) -> Iterator[AllenRelation]:
        return (r for r in RELATIONS if self.mask & r.bit)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    @property
    def is_full(self) -> bool:
        return self.mask == FULL_MASK

    @property
    def is_singleton(self) -> bool:
        return self.mask.bit_count() == 1

    def only(self) -> AllenRelation:
        if not self.is_singleton:
            raise RelationError(f"not a singleton relation set: {self}", relations=self.names())
        return next(iter(self))

    def names(self) -> list[str]:
        return sorted(r.value for r in self)

    def __str__(self) -> str:
        return ",".join(self.names())

    def __repr__(self) -> str:
        return f"RelationSet({{{str(self)}}})"


EMPTY = RelationSet(0)
FULL = RelationSet(FULL_MASK)


# ---- Endpoint semantics -----------------------------------------------------
@dataclass(frozen=True, slots=True)
class PointInterval:
    start: int
    end: int

    def __post_init__(self):
        if not self.start < self.end:
            raise IntervalError(
                f"interval must have start < end, got ({self.start}, {self.end})",
                start=self.start, end=self.end,
            )


def relate(a: PointInterval, b: PointInterval) -> AllenRelation:
    """The unique basic relation of `a` to `b`."""
    if a.end < b.start:
        return AllenRelation.BEFORE
    if b.end < a.start:
        return AllenRelation.AFTER
    if a.end == b.start:
        return AllenRelation.MEETS
    if b.end == a.start:
        return AllenRelation.MET_BY
    if a.start == b.start and a.end == b.end:
        return AllenRelation.EQUALS
    if a.start == b.start:
        return AllenRelation.STARTS if a.end < b.end else AllenRelation.STARTED_BY
    if a.end == b.end:
        return AllenRelation.FINISHES if a.start > b.start else AllenRelation.FINISHED_BY
    if a.start < b.start:
        return AllenRelation.OVERLAPS if a.end < b.end else AllenRelation.CONTAINS
    return AllenRelation.OVERLAPPED_BY if a.end > b.end else AllenRelation.DURING


@cache
def oracle_intervals(hi: int = ORACLE_MAX) -> tuple[PointInterval, ...]:
    return tuple(PointInterval(s, e) for s, e in itertools.combinations(range(hi + 1), 2))


def compose_oracle(a: AllenRelation, b: AllenRelation) -> RelationSet:
    """Brute force: every relate(X, Z) with relate(X, Y) = a and relate(Y, Z) = b."""
    ivs = oracle_intervals()
    m = 0
    for y in ivs:
        xs = [x for x in ivs if relate(x, y) is a]
        zs = [z for z in ivs if relate(y, z) is b]
        for x in xs:
            for z in zs:
                m |= relate(x, z).bit
    return RelationSet(m)


@cache
def composition_table() -> tuple[tuple[int, ...], ...]:
    """The 13x13 table of basic compositions as masks, indexed by relation position."""
    ivs = oracle_intervals()
    n = len(RELATIONS)
    table = [[0] * n for _ in range(n)]
    rel = {(x, y): _INDEX[relate(x, y)] for x in ivs for y in ivs}
    for x in ivs:
        for y in ivs:
            i = rel[x, y]
            row = table[i]
            for z in ivs:
                row[rel[y, z]] |= 1 << rel[x, z]
    return tuple(tuple(r) for r in table)


# ---- Mask-level operations (hot path for propagation) -----------------------
def _bits(mask: int) -> list[int]:
    return [i for i in range(len(RELATIONS)) if mask >> i & 1]


@lru_cache(maxsize=None)
def converse_mask(mask: int) -> int:
    out = 0
    for i in _bits(mask):
        out |= RELATIONS[i].converse.bit
    return out


@lru_cache(maxsize=1 << 17)
def compose_masks(m1: int, m2: int) -> int:
    if not m1 or not m2:
        return 0
    if m1 == FULL_MASK or m2 == FULL_MASK:
        # full ∘ anything nonempty is full (every row and column of the table covers all 13)
        return FULL_MASK
    table = composition_table()
    out = 0
    right = _bits(m2)
    for i in _bits(m1):
        row = table[i]
        for j in right:
            out |= row[j]
            if out == FULL_MASK:
                return out
    return out


def converse(r: RelationSet) -> RelationSet:
    return RelationSet(converse_mask(r.mask))


def compose(r1: RelationSet, r2: RelationSet) -> RelationSet:
    return RelationSet(compose_masks(r1.mask, r2.mask))


# "contained in or coincides with"
CONTAINMENT = RelationSet.of(
    AllenRelation.STARTS, AllenRelation.DURING, AllenRelation.FINISHES, AllenRelation.EQUALS,
)
