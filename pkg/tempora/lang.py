# tempora/lang.py
"""The temporal logical-form language.

Three semantic types, three predicate classes, one fixed grammar:

    START        -> TimeInterval
    TimeInterval -> [Fn1, TimeInterval]
    TimeInterval -> [Fn2, TimeInterval, TimeInterval]
    Fn1          -> before | after | ... | equals
    Fn2          -> union | intersection
    TimeInterval -> <context constant>

Forms are written as S-expressions, e.g. ``(intersection (before ei1) (after t3))``,
and linearized as the preorder list of productions that derives them.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

from .algebra import RELATIONS, AllenRelation
from .errors import LFSyntaxError, ReplayError, TypeCheckError
from .network import NodeKind


class SemanticType(Enum):
    TIME_INTERVAL = "TimeInterval"
    FN1 = "Fn1"
    FN2 = "Fn2"

    def __str__(self) -> str:
        return self.value


START = "START"
TI = SemanticType.TIME_INTERVAL.value
FN1 = SemanticType.FN1.value
FN2 = SemanticType.FN2.value
NONTERMINALS = frozenset({START, TI, FN1, FN2})

SET_OPS = ("intersection", "union")
RELATION_NAMES = frozenset(r.value for r in RELATIONS)
RESERVED = NONTERMINALS | RELATION_NAMES | frozenset(SET_OPS)

# `(equals X)` denotes exactly X, so generation grammars leave it out.
GENERATION_RELATIONS: tuple[AllenRelation, ...] = tuple(r for r in RELATIONS if r is not AllenRelation.EQUALS)

_LABEL_RE = re.compile(r"^[^\s()]+$")


# ---- Logical forms ----------------------------------------------------------
@dataclass(frozen=True, slots=True)
class Constant:
    label: str

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True, slots=True)
class RelationFn:
    relation: AllenRelation
    arg: "LogicalForm"

    def __str__(self) -> str:
        return f"({self.relation.value} {self.arg})"


@dataclass(frozen=True, slots=True)
class SetOpFn:
    op: str
    left: "LogicalForm"
    right: "LogicalForm"

    def __post_init__(self):
        if self.op not in SET_OPS:
            raise TypeCheckError(f"unknown set operation: {self.op!r}", predicate=self.op)

    def __str__(self) -> str:
        return f"({self.op} {self.left} {self.right})"


LogicalForm = Union[Constant, RelationFn, SetOpFn]


def size(lf: LogicalForm) -> int:
    """Action-sequence length of `lf` (START included)."""
    return 1 + _body_size(lf)


def _body_size(lf: LogicalForm) -> int:
    if isinstance(lf, Constant):
        return 1
    if isinstance(lf, RelationFn):
        return 2 + _body_size(lf.arg)
    return 2 + _body_size(lf.left) + _body_size(lf.right)


def depth(lf: LogicalForm) -> int:
    if isinstance(lf, Constant):
        return 1
    if isinstance(lf, RelationFn):
        return 1 + depth(lf.arg)
    return 1 + max(depth(lf.left), depth(lf.right))


# ---- Vocabulary -------------------------------------------------------------
@dataclass(frozen=True)
class Vocabulary:
    """Context constants available to a form: (label, kind) pairs, labels unique."""
    entries: tuple[tuple[str, NodeKind], ...]

    def __post_init__(self):
        seen: set[str] = set()
        for label, kind in self.entries:
            if not _LABEL_RE.match(label) or label in RESERVED:
                raise TypeCheckError(f"invalid constant label: {label!r}", constant=label)
            if kind not in (NodeKind.EVENT, NodeKind.TIMEX):
                raise TypeCheckError(f"constant {label!r} must be an event or a timex", constant=label)
            if label in seen:
                raise TypeCheckError(f"duplicate constant label: {label!r}", constant=label)
            seen.add(label)

    @classmethod
    def of(cls, labels: Iterable[str], kind: NodeKind = NodeKind.EVENT) -> "Vocabulary":
        return cls(tuple((label, kind) for label in labels))

    @classmethod
    def infer(cls, labels: Iterable[str]) -> "Vocabulary":
        """TimeML convention: `t*` ids are timexes, everything else an event instance."""
        return cls(tuple((l, NodeKind.TIMEX if l.startswith("t") else NodeKind.EVENT) for l in labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.entries)

    def kind(self, label: str) -> NodeKind:
        for l, k in self.entries:
            if l == label:
                return k
        raise TypeCheckError(f"unknown constant: {label!r}", constant=label)

    def __contains__(self, label: str) -> bool:
        return any(l == label for l, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.labels)


# ---- S-expression syntax ----------------------------------------------------
_TOKEN_RE = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    out: list[tuple[str, int]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise LFSyntaxError(f"unexpected character at {pos}", position=pos)
            break
        tok = m.group(1) or m.group(2) or m.group(3)
        if tok is None:
            break
        out.append((tok, m.start(m.lastindex)))
        pos = m.end()
    return out


def parse_sexpr(text: str) -> LogicalForm:
    """Parse the canonical prefix notation; errors carry the offending position."""
    tokens = _tokenize(text)
    if not tokens:
        raise LFSyntaxError("empty logical form", position=0)
    lf, i = _parse_at(tokens, 0, len(text))
    if i != len(tokens):
        tok, pos = tokens[i]
        raise LFSyntaxError(f"unexpected {tok!r} after the end of the form at {pos}", position=pos)
    return lf


def _parse_at(tokens: list[tuple[str, int]], i: int, end: int) -> tuple[LogicalForm, int]:
    if i >= len(tokens):
        raise LFSyntaxError(f"unbalanced parentheses: input ends at {end}", position=end)
    tok, pos = tokens[i]
    if tok == ")":
        raise LFSyntaxError(f"unbalanced parentheses: unexpected ')' at {pos}", position=pos)
    if tok != "(":
        if tok in RESERVED:
            raise LFSyntaxError(f"predicate {tok!r} used as a constant at {pos}", position=pos)
        return Constant(tok), i + 1

    # ( head args... )
    if i + 1 >= len(tokens):
        raise LFSyntaxError(f"unbalanced parentheses: '(' at {pos} is never closed", position=pos)
    head, hpos = tokens[i + 1]
    if head in ("(", ")"):
        raise LFSyntaxError(f"expected a predicate name at {hpos}", position=hpos)
    if head in RELATION_NAMES:
        arity = 1
    elif head in SET_OPS:
        arity = 2
    else:
        raise LFSyntaxError(f"unknown predicate {head!r} at {hpos}", position=hpos)

    args: list[LogicalForm] = []
    j = i + 2
    while True:
        if j >= len(tokens):
            raise LFSyntaxError(f"unbalanced parentheses: '(' at {pos} is never closed", position=pos)
        if tokens[j][0] == ")":
            break
        arg, j = _parse_at(tokens, j, end)
        args.append(arg)
    if len(args) != arity:
        raise LFSyntaxError(
            f"{head} takes {arity} argument{'s' if arity > 1 else ''}, got {len(args)} at {hpos}",
            position=hpos,
        )
    if arity == 1:
        return RelationFn(AllenRelation(head), args[0]), j + 1
    return SetOpFn(head, args[0], args[1]), j + 1


# ---- Types ------------------------------------------------------------------
def type_check(lf: LogicalForm, vocab: Vocabulary) -> SemanticType:
    if isinstance(lf, Constant):
        if lf.label not in vocab:
            raise TypeCheckError(f"unknown constant: {lf.label!r}", constant=lf.label)
        return SemanticType.TIME_INTERVAL
    if isinstance(lf, RelationFn):
        if not isinstance(lf.relation, AllenRelation):
            raise TypeCheckError(f"not a relation function: {lf.relation!r}", predicate=str(lf.relation))
        _expect_interval(type_check(lf.arg, vocab), lf)
        return SemanticType.TIME_INTERVAL
    if isinstance(lf, SetOpFn):
        _expect_interval(type_check(lf.left, vocab), lf)
        _expect_interval(type_check(lf.right, vocab), lf)
        return SemanticType.TIME_INTERVAL
    raise TypeCheckError(f"not a logical form: {lf!r}")


def _expect_interval(t: SemanticType, where: LogicalForm):
    if t is not SemanticType.TIME_INTERVAL:
        raise TypeCheckError(f"argument of {where} is not a TimeInterval")


# ---- Productions and action sequences --------------------------------------
@dataclass(frozen=True, slots=True)
class Production:
    lhs: str
    rhs: tuple[str, ...]

    def __post_init__(self):
        if self.lhs not in NONTERMINALS:
            raise ReplayError(f"not a nonterminal: {self.lhs!r}", kind="inapplicable")
        if not self.rhs:
            raise ReplayError(f"empty right-hand side for {self.lhs}", kind="inapplicable")

    @property
    def nonterminals(self) -> tuple[str, ...]:
        return tuple(s for s in self.rhs if s in NONTERMINALS)

    @classmethod
    def parse(cls, text: str) -> "Production":
        """Inverse of `str()`: `LHS -> RHS` or `LHS -> [A, B, ...]`."""
        lhs, sep, rhs = text.partition("->")
        if not sep:
            raise ReplayError(f"not a production: {text!r}", kind="inapplicable")
        rhs = rhs.strip()
        if rhs.startswith("[") and rhs.endswith("]"):
            symbols = tuple(s.strip() for s in rhs[1:-1].split(",") if s.strip())
        else:
            symbols = (rhs,)
        return cls(lhs.strip(), symbols)

    def __str__(self) -> str:
        if len(self.rhs) == 1:
            return f"{self.lhs} -> {self.rhs[0]}"
        return f"{self.lhs} -> [{', '.join(self.rhs)}]"


START_RULE = Production(START, (TI,))
APPLY1_RULE = Production(TI, (FN1, TI))
APPLY2_RULE = Production(TI, (FN2, TI, TI))
RELATION_RULES = {r: Production(FN1, (r.value,)) for r in RELATIONS}
SET_OP_RULES = {op: Production(FN2, (op,)) for op in SET_OPS}

ActionSequence = tuple[Production, ...]


def constant_rule(label: str) -> Production:
    return Production(TI, (label,))


def min_cost(symbol: str) -> int:
    """Fewest actions that can fully expand `symbol`."""
    return 2 if symbol == START else 1


def to_actions(lf: LogicalForm) -> ActionSequence:
    out: list[Production] = [START_RULE]
    _emit(lf, out)
    return tuple(out)


def _emit(lf: LogicalForm, out: list[Production]):
    if isinstance(lf, Constant):
        out.append(constant_rule(lf.label))
    elif isinstance(lf, RelationFn):
        out.append(APPLY1_RULE)
        out.append(RELATION_RULES[lf.relation])
        _emit(lf.arg, out)
    else:
        out.append(APPLY2_RULE)
        out.append(SET_OP_RULES[lf.op])
        _emit(lf.left, out)
        _emit(lf.right, out)


def from_actions(seq: Sequence[Production]) -> LogicalForm:
    """Replay productions from START; the unique derivation tree."""
    it = iter(enumerate(seq))

    def take(expected: str) -> tuple[int, Production]:
        try:
            idx, p = next(it)
        except StopIteration:
            raise ReplayError(
                f"action sequence ends with {expected} still pending",
                kind="dangling", index=len(seq),
            ) from None
        if p.lhs != expected:
            raise ReplayError(
                f"action {idx} ({p}) does not apply: frontier expects {expected}",
                kind="inapplicable", index=idx,
            )
        return idx, p

    def interval() -> LogicalForm:
        idx, p = take(TI)
        if p == APPLY1_RULE:
            j, fn = take(FN1)
            name = fn.rhs[0]
            if len(fn.rhs) != 1 or name not in RELATION_NAMES:
                raise ReplayError(f"action {j} ({fn}) is not a relation function", kind="inapplicable", index=j)
            return RelationFn(AllenRelation(name), interval())
        if p == APPLY2_RULE:
            j, fn = take(FN2)
            name = fn.rhs[0]
            if len(fn.rhs) != 1 or name not in SET_OPS:
                raise ReplayError(f"action {j} ({fn}) is not a set operation", kind="inapplicable", index=j)
            left = interval()
            return SetOpFn(name, left, interval())
        if len(p.rhs) != 1 or p.rhs[0] in RESERVED:
            raise ReplayError(f"action {idx} ({p}) is not a TimeInterval production", kind="inapplicable", index=idx)
        return Constant(p.rhs[0])

    _, first = take(START)
    if first != START_RULE:
        raise ReplayError(f"action 0 ({first}) is not the start production", kind="inapplicable", index=0)
    lf = interval()
    rest = next(it, None)
    if rest is not None:
        idx, p = rest
        raise ReplayError(f"action {idx} ({p}) does not apply: derivation already complete", kind="inapplicable", index=idx)
    return lf


def format_actions(seq: Iterable[Production]) -> list[str]:
    return [str(p) for p in seq]


def parse_actions(lines: Iterable[str]) -> ActionSequence:
    return tuple(Production.parse(l) for l in lines if l.strip())


# ---- Random derivations -----------------------------------------------------
def sample_form(
    vocab: Vocabulary,
    rng: random.Random,
    max_depth: int = 3,
    relations: Sequence[AllenRelation] = RELATIONS,
) -> LogicalForm:
    """A random grammar derivation of depth <= max_depth."""
    labels = vocab.labels
    if max_depth <= 1:
        return Constant(rng.choice(labels))
    roll = rng.random()
    if roll < 0.3:
        return Constant(rng.choice(labels))
    if roll < 0.7:
        return RelationFn(rng.choice(list(relations)), sample_form(vocab, rng, max_depth - 1, relations))
    return SetOpFn(
        rng.choice(SET_OPS),
        sample_form(vocab, rng, max_depth - 1, relations),
        sample_form(vocab, rng, max_depth - 1, relations),
    )
