# tempora/dpd.py
"""Dynamic programming on denotations.

Forms are built bottom-up by action count. Sub-forms of one size are grouped
into classes that share a head relation and a signature (the root's
propagated relations to every context constant plus the propagated
constant-to-constant labels). Only one representative per class is ever
executed; a class remembers *how* it was derived, so member forms are
reconstructed only for the classes whose root relations match the gold
denotation. Every reconstructed form is re-executed before it is returned.

Pruning (on by default) removes, at generation time:
  (a) ``(op X X)``, since a set operation over one interval is that interval;
  (b) ``(f (g X))`` when ``{f} ∘ {g}`` is ``{f}`` or ``{g}``;
  (c) the ``equals`` relation function.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from functools import cache
from typing import Iterator, Mapping

from . import config
from ._log import log
from .algebra import RELATIONS, AllenRelation, RelationSet, compose
from .errors import SearchError
from .executor import (
    Denotation, Execution, ExecutionContext, compile_form, execute,
)
from .lang import (
    GENERATION_RELATIONS, SET_OPS, Constant, LogicalForm, RelationFn, SetOpFn, Vocabulary,
)
from .network import Status

INCONSISTENT = "INCONSISTENT"


@dataclass(frozen=True)
class GoldDenotation:
    """Gold relation of the root interval to each linked constant (singletons only)."""
    relations: Mapping[str, RelationSet] = field(default_factory=dict)

    def __post_init__(self):
        for label, r in self.relations.items():
            if not r.is_singleton:
                raise SearchError(
                    f"gold relation for {label!r} must be a single relation, got {{{r}}}",
                    label=label, relations=r.names(),
                )

    @classmethod
    def of(cls, pairs: Mapping[str, str | AllenRelation]) -> "GoldDenotation":
        return cls({
            label: RelationSet.of(r if isinstance(r, AllenRelation) else AllenRelation.parse(r))
            for label, r in pairs.items()
        })

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted(self.relations))

    def __len__(self) -> int:
        return len(self.relations)

    def to_dict(self) -> dict[str, str]:
        return {label: str(r) for label, r in sorted(self.relations.items())}


@dataclass(frozen=True)
class SearchConfig:
    max_actions: int = config.MAX_ACTIONS
    pruning: bool = True
    max_results: int | None = None
    lax: bool = False

    def __post_init__(self):
        if self.max_actions < 2:
            raise SearchError(f"max_actions must be >= 2, got {self.max_actions}", max_actions=self.max_actions)
        if self.max_results is not None and self.max_results < 1:
            raise SearchError(f"max_results must be positive, got {self.max_results}", max_results=self.max_results)

    @property
    def relations(self) -> tuple[AllenRelation, ...]:
        return GENERATION_RELATIONS if self.pruning else RELATIONS


@dataclass
class SearchStats:
    enumerated: int = 0   # canonical forms represented by the DP table
    pruned: int = 0       # candidates rejected by pruning rules
    signatures: int = 0   # distinct denotation signatures reached
    classes: int = 0
    executions: int = 0
    rejected: int = 0     # reconstructed forms that failed re-execution
    elapsed: float = 0.0

    def to_dict(self, *, timing: bool = True) -> dict[str, float | int]:
        out: dict[str, float | int] = {
            "enumerated": self.enumerated,
            "pruned": self.pruned,
            "signatures": self.signatures,
            "classes": self.classes,
            "executions": self.executions,
            "rejected": self.rejected,
        }
        if timing:
            out["elapsed"] = round(self.elapsed, 6)
        return out


@dataclass
class SearchResult:
    matches: list[LogicalForm]
    stats: SearchStats


# ---- Pruning rules ----------------------------------------------------------
@cache
def redundant_chain(outer: AllenRelation, inner: AllenRelation) -> bool:
    """True when {outer} ∘ {inner} is {outer} or {inner}."""
    c = compose(RelationSet.of(outer), RelationSet.of(inner))
    return c == RelationSet.of(outer) or c == RelationSet.of(inner)


def _ordered(a: LogicalForm, b: LogicalForm) -> tuple[LogicalForm, LogicalForm]:
    return (a, b) if str(a) <= str(b) else (b, a)


# ---- Exhaustive enumeration -------------------------------------------------
def enumerate_forms(vocab: Vocabulary, cfg: SearchConfig | None = None) -> Iterator[LogicalForm]:
    """Every canonical (and, if enabled, pruned) form within the action bound, once each."""
    cfg = cfg or SearchConfig()
    if not len(vocab):
        raise SearchError("cannot enumerate over an empty vocabulary")
    limit = cfg.max_actions - 1
    by_size: dict[int, list[LogicalForm]] = {}
    for s in range(1, limit + 1):
        out: list[LogicalForm] = []
        if s == 1:
            out.extend(Constant(label) for label in vocab.labels)
        if s >= 3:
            for arg in by_size[s - 2]:
                for r in cfg.relations:
                    if cfg.pruning and isinstance(arg, RelationFn) and redundant_chain(r, arg.relation):
                        continue
                    out.append(RelationFn(r, arg))
        for a in range(1, (s - 2) // 2 + 1):
            b = s - 2 - a
            lefts, rights = by_size[a], by_size[b]
            for i, x in enumerate(lefts):
                start = i if a == b else 0
                for j in range(start, len(rights)):
                    y = rights[j]
                    if a == b and i == j and cfg.pruning:
                        continue
                    left, right = _ordered(x, y)
                    out.extend(SetOpFn(op, left, right) for op in SET_OPS)
        out.sort(key=str)
        by_size[s] = out
        yield from out


# ---- Matching ---------------------------------------------------------------
def matches(d: Denotation, gold: GoldDenotation, *, lax: bool = False) -> bool:
    """Strict: every gold label maps to exactly the gold singleton. Lax: contains it."""
    if d.status is not Status.CONSISTENT:
        return False
    for label, g in gold.relations.items():
        got = d.relations.get(label)
        if got is None:
            return False
        if lax:
            if not got.mask & g.mask:
                return False
        elif got != g:
            return False
    return True


# ---- DP search --------------------------------------------------------------
Key = object  # (root_row, constant_labels) or INCONSISTENT


@dataclass(eq=False)
class _Class:
    """Forms of one size sharing head relation and signature."""
    id: int
    size: int                      # action count without START
    head: AllenRelation | None     # top relation function, if any
    key: Key
    rep: LogicalForm
    derivations: list[tuple] = field(default_factory=list)
    count: int = 0


@dataclass(eq=False)
class _Group:
    """All classes of one size with one signature; set operations only see keys."""
    id: int
    size: int
    key: Key
    classes: tuple[_Class, ...]
    count: int

    @property
    def rep(self) -> LogicalForm:
        return self.classes[0].rep


class _Table:
    def __init__(self, ctx: ExecutionContext, cfg: SearchConfig):
        self.ctx = ctx
        self.cfg = cfg
        self.labels = ctx.vocabulary.labels
        self.by_size: dict[int, list[_Class]] = {}
        self.groups: dict[int, list[_Group]] = {}
        self._index: dict[tuple, _Class] = {}
        self._memo: dict[tuple, Key] = {}
        self._members: dict[tuple[str, int], list[LogicalForm]] = {}
        self.stats = SearchStats()

    # -- keys --
    def key_of(self, ex: Execution) -> Key:
        if ex.status is not Status.CONSISTENT:
            return INCONSISTENT
        net = ex.network
        ids = [ex.context_nodes[l] for l in self.labels]
        row = tuple(net.edge(ex.root, i).mask for i in ids)
        pairs = tuple(net.edge(a, b).mask for a, b in itertools.combinations(ids, 2))
        return (row, pairs)

    def run(self, lf: LogicalForm) -> Key:
        self.stats.executions += 1
        return self.key_of(compile_form(lf, self.ctx))

    def signature(self, key: Key) -> str:
        if key == INCONSISTENT:
            return INCONSISTENT
        return ";".join(
            f"{label}:{RelationSet(m)}" for label, m in sorted(zip(self.labels, key[0]))
        )

    # -- classes --
    def add(self, size: int, head: AllenRelation | None, key: Key, rep: LogicalForm, derivation: tuple, count: int):
        if count <= 0:
            return
        ident = (size, head, key)
        cls = self._index.get(ident)
        if cls is None:
            cls = _Class(len(self._index), size, head, key, rep)
            self._index[ident] = cls
            self.by_size.setdefault(size, []).append(cls)
        cls.derivations.append(derivation)
        cls.count += count
        self.stats.enumerated += count

    def seal(self, size: int):
        """Group the finished classes of `size` by signature."""
        grouped: dict[Key, list[_Class]] = {}
        for cls in self.by_size.get(size, []):
            grouped.setdefault(cls.key, []).append(cls)
        start = sum(len(g) for g in self.groups.values())
        self.groups[size] = [
            _Group(start + n, size, key, tuple(members), sum(c.count for c in members))
            for n, (key, members) in enumerate(grouped.items())
        ]

    def iter_members(self, node: _Class | _Group) -> Iterator[LogicalForm]:
        if isinstance(node, _Group):
            for cls in node.classes:
                yield from self.iter_members(cls)
            return
        for d in node.derivations:
            kind = d[0]
            if kind == "const":
                yield Constant(d[1])
            elif kind == "rel":
                yield from (RelationFn(d[1], m) for m in self.iter_members(d[2]))
            elif kind == "op":
                rights = self.members(d[3])
                for x in self.iter_members(d[2]):
                    for y in rights:
                        yield SetOpFn(d[1], *_ordered(x, y))
            elif kind == "pair":
                for x, y in itertools.combinations(self.members(d[2]), 2):
                    yield SetOpFn(d[1], *_ordered(x, y))
            else:  # diag
                yield from (SetOpFn(d[1], m, m) for m in self.iter_members(d[2]))

    def members(self, node: _Class | _Group) -> list[LogicalForm]:
        tag = ("g" if isinstance(node, _Group) else "c", node.id)
        if tag not in self._members:
            self._members[tag] = list(self.iter_members(node))
        return self._members[tag]

    # -- combination --
    def apply_relation(self, r: AllenRelation, arg: _Class) -> Key:
        if arg.key == INCONSISTENT:
            return INCONSISTENT
        memo = ("rel", r, arg.key)
        if memo not in self._memo:
            self._memo[memo] = self.run(RelationFn(r, arg.rep))
        return self._memo[memo]

    def apply_set_op(self, op: str, a: _Group, b: _Group) -> tuple[Key, LogicalForm]:
        if a is b:
            x, y = itertools.islice(self.iter_members(a), 2)
            rep = SetOpFn(op, *_ordered(x, y))
        else:
            rep = SetOpFn(op, *_ordered(a.rep, b.rep))
        if a.key == INCONSISTENT or b.key == INCONSISTENT:
            return INCONSISTENT, rep
        # two distinct forms with keys ka, kb combine the same way whichever classes they came from
        memo = ("op", op, *sorted((a.key, b.key)))
        if memo not in self._memo:
            self._memo[memo] = self.run(rep)
        return self._memo[memo], rep

    def build(self):
        cfg = self.cfg
        limit = cfg.max_actions - 1
        for s in range(1, limit + 1):
            self.by_size.setdefault(s, [])
            if s == 1:
                for label in self.labels:
                    c = Constant(label)
                    self.add(1, None, self.run(c), c, ("const", label), 1)
            if s >= 3:
                for arg in self.by_size[s - 2]:
                    for r in RELATIONS:
                        if r not in cfg.relations or (
                            cfg.pruning and arg.head is not None and redundant_chain(r, arg.head)
                        ):
                            self.stats.pruned += arg.count
                            continue
                        key = self.apply_relation(r, arg)
                        self.add(s, r, key, RelationFn(r, arg.rep), ("rel", r, arg), arg.count)
            for a in range(1, (s - 2) // 2 + 1):
                b = s - 2 - a
                lefts, rights = self.groups[a], self.groups[b]
                for i in range(len(lefts)):
                    ga = lefts[i]
                    for j in range(i if a == b else 0, len(rights)):
                        gb = rights[j]
                        for op in SET_OPS:
                            if ga is gb:
                                self._same_group(s, op, ga)
                            else:
                                key, rep = self.apply_set_op(op, ga, gb)
                                self.add(s, None, key, rep, ("op", op, ga, gb), ga.count * gb.count)
            self.seal(s)
        self.stats.classes = len(self._index)

    def _same_group(self, s: int, op: str, g: _Group):
        if self.cfg.pruning:
            self.stats.pruned += g.count
        else:
            self.add(s, None, g.key, SetOpFn(op, g.rep, g.rep), ("diag", op, g), g.count)
        if g.count >= 2:
            key, rep = self.apply_set_op(op, g, g)
            self.add(s, None, key, rep, ("pair", op, g), g.count * (g.count - 1) // 2)

    def classes(self) -> Iterator[_Class]:
        for s in sorted(self.by_size):
            yield from self.by_size[s]


def _key_matches(table: _Table, key: Key, gold: GoldDenotation, lax: bool) -> bool:
    if key == INCONSISTENT:
        return False
    row = dict(zip(table.labels, key[0]))
    for label, g in gold.relations.items():
        m = row[label]
        if lax:
            if not m & g.mask:
                return False
        elif m != g.mask:
            return False
    return True


def search(
    vocab: Vocabulary,
    ctx: ExecutionContext | None,
    gold: GoldDenotation,
    cfg: SearchConfig | None = None,
) -> SearchResult:
    """All forms within the bound whose denotation matches `gold` (up to max_results)."""
    cfg = cfg or SearchConfig()
    ctx = ctx or ExecutionContext(vocab)
    if ctx.vocabulary != vocab:
        raise SearchError("execution context vocabulary differs from the search vocabulary")
    if not len(vocab):
        raise SearchError("cannot search over an empty vocabulary")
    unknown = [label for label in gold.labels if label not in vocab]
    if unknown:
        raise SearchError(f"gold references unknown labels: {', '.join(unknown)}", labels=unknown)

    t0 = time.perf_counter()
    table = _Table(ctx, cfg)
    table.build()

    found: list[LogicalForm] = []
    hits: dict[int, list[_Class]] = {}
    for cls in table.classes():
        if _key_matches(table, cls.key, gold, cfg.lax):
            hits.setdefault(cls.size, []).append(cls)
    done = False
    for s in sorted(hits):
        forms = sorted((m for cls in hits[s] for m in table.members(cls)), key=str)
        for lf in forms:
            if matches(execute(lf, ctx), gold, lax=cfg.lax):
                found.append(lf)
                if cfg.max_results is not None and len(found) >= cfg.max_results:
                    done = True
                    break
            else:
                table.stats.rejected += 1
        if done:
            break

    table.stats.signatures = len({table.signature(cls.key) for cls in table.classes()})
    table.stats.elapsed = time.perf_counter() - t0
    if table.stats.rejected:
        log("dpd: re-execution rejected", table.stats.rejected, "reconstructed forms")
    log("dpd:", table.stats.to_dict())
    return SearchResult(found, table.stats)


def reachable_signatures(
    vocab: Vocabulary, cfg: SearchConfig | None = None, ctx: ExecutionContext | None = None,
) -> frozenset[str]:
    """Denotation signatures of every form within the bound, read off the DP table."""
    table = _Table(ctx or ExecutionContext(vocab), cfg or SearchConfig())
    table.build()
    return frozenset(table.signature(cls.key) for cls in table.classes())
