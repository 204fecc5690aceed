# tempora/decoder.py
"""Grammar-constrained transition decoding.

A parser state is a stack of pending nonterminals plus the productions
applied so far. Only productions that can still complete within the action
budget are offered, so every hypothesis the beam keeps can finish. Scores
are additive over actions; a `Scorer` is any deterministic callable
``(state, action, context) -> float``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from . import config
from ._log import log
from .algebra import RELATIONS, AllenRelation
from .dpd import redundant_chain
from .errors import DecodeError
from .lang import (
    APPLY1_RULE, APPLY2_RULE, FN1, FN2, GENERATION_RELATIONS, RELATION_RULES, SET_OP_RULES,
    START, START_RULE, TI, Constant, LogicalForm, Production, RelationFn, SetOpFn,
    Vocabulary, constant_rule, from_actions, min_cost, size,
)
from .network import NodeKind

DEFAULT_TRIGGERS: dict[str, AllenRelation] = {
    "before": AllenRelation.BEFORE,
    "after": AllenRelation.AFTER,
    "while": AllenRelation.DURING,
    "during": AllenRelation.DURING,
    "until": AllenRelation.MEETS,
    "when": AllenRelation.EQUALS,
}


# ---- Transition system ------------------------------------------------------
@dataclass(frozen=True)
class ParserState:
    frontier: tuple[str, ...] = (START,)  # stack; the last entry is expanded next
    actions: tuple[Production, ...] = ()

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def terminal(self) -> bool:
        return not self.frontier

    @property
    def top(self) -> str:
        if not self.frontier:
            raise DecodeError("terminal state has no frontier")
        return self.frontier[-1]


def initial_state() -> ParserState:
    return ParserState()


def _candidates(top: str, vocab: Vocabulary, relations: Sequence[AllenRelation]) -> list[Production]:
    if top == START:
        return [START_RULE]
    if top == TI:
        return [constant_rule(label) for label in vocab.labels] + [APPLY1_RULE, APPLY2_RULE]
    if top == FN1:
        return [RELATION_RULES[r] for r in relations]
    if top == FN2:
        return list(SET_OP_RULES.values())
    raise DecodeError(f"not a nonterminal: {top!r}")


def _chained_outer(actions: tuple[Production, ...]) -> AllenRelation | None:
    """The outer relation f when the pending Fn1 is g in ``(f (g X))``."""
    if len(actions) >= 3 and actions[-1] == APPLY1_RULE and actions[-3] == APPLY1_RULE:
        prev = actions[-2]
        if prev.lhs == FN1:
            return AllenRelation(prev.rhs[0])
    return None


def valid_actions(
    state: ParserState,
    vocab: Vocabulary,
    max_actions: int = config.MAX_ACTIONS,
    *,
    pruning: bool = True,
) -> list[Production]:
    """Productions for the frontier top that still fit the remaining budget."""
    if state.terminal:
        return []
    remaining = max_actions - state.length
    rest = sum(min_cost(s) for s in state.frontier[:-1])
    relations = GENERATION_RELATIONS if pruning else RELATIONS
    out: list[Production] = []
    outer = _chained_outer(state.actions) if pruning and state.top == FN1 else None
    for p in _candidates(state.top, vocab, relations):
        if 1 + sum(min_cost(s) for s in p.nonterminals) + rest > remaining:
            continue
        if outer is not None and redundant_chain(outer, AllenRelation(p.rhs[0])):
            continue
        out.append(p)
    return out


def step(state: ParserState, action: Production) -> ParserState:
    """Pop the top, push the rhs nonterminals so the leftmost is expanded next."""
    if state.terminal:
        raise DecodeError(f"cannot apply {action} to a terminal state")
    if action.lhs != state.top:
        raise DecodeError(f"{action} does not expand the frontier top {state.top}", action=str(action), top=state.top)
    pushed = tuple(reversed(action.nonterminals))
    return ParserState(state.frontier[:-1] + pushed, state.actions + (action,))


# ---- Beam search --------------------------------------------------------------
@dataclass(frozen=True)
class DecodeContext:
    tokens: tuple[str, ...]
    vocabulary: Vocabulary
    positions: Mapping[str, int] = field(default_factory=dict)  # label -> token index
    anchor_position: int | None = None


Scorer = Callable[[ParserState, Production, DecodeContext], float]


@dataclass(frozen=True)
class Hypothesis:
    state: ParserState
    score: float = 0.0


@dataclass(frozen=True)
class ScoredForm:
    form: LogicalForm
    score: float

    def to_dict(self) -> dict:
        return {"form": str(self.form), "score": round(self.score, 6)}


def canonical(lf: LogicalForm) -> LogicalForm:
    """Set-operation arguments ordered by serialization, recursively."""
    if isinstance(lf, Constant):
        return lf
    if isinstance(lf, RelationFn):
        return RelationFn(lf.relation, canonical(lf.arg))
    a, b = canonical(lf.left), canonical(lf.right)
    return SetOpFn(lf.op, a, b) if str(a) <= str(b) else SetOpFn(lf.op, b, a)


def _has_idempotent_op(lf: LogicalForm) -> bool:
    if isinstance(lf, Constant):
        return False
    if isinstance(lf, RelationFn):
        return _has_idempotent_op(lf.arg)
    return lf.left == lf.right or _has_idempotent_op(lf.left) or _has_idempotent_op(lf.right)


def _rank(h: Hypothesis) -> tuple:
    # completed hypotheses win score ties
    return (-h.score, not h.state.terminal, tuple(str(a) for a in h.state.actions))


def beam_search(
    ctx: DecodeContext,
    scorer: Scorer,
    beam_width: int = config.BEAM_WIDTH,
    max_actions: int = config.MAX_ACTIONS,
    *,
    pruning: bool = True,
) -> list[ScoredForm]:
    """Completed forms, best first: higher score, then fewer actions, then serialization."""
    if beam_width < 1:
        raise DecodeError(f"beam_width must be >= 1, got {beam_width}", beam_width=beam_width)
    if max_actions < 2:
        raise DecodeError(f"max_actions must be >= 2, got {max_actions}", max_actions=max_actions)
    if not len(ctx.vocabulary):
        raise DecodeError("cannot decode without context constants")

    beam = [Hypothesis(initial_state())]
    done: dict[str, ScoredForm] = {}
    while beam:
        expanded: list[Hypothesis] = []
        for h in beam:
            for a in valid_actions(h.state, ctx.vocabulary, max_actions, pruning=pruning):
                expanded.append(Hypothesis(step(h.state, a), h.score + scorer(h.state, a, ctx)))
        expanded.sort(key=_rank)
        beam = []
        for h in expanded[:beam_width]:
            if not h.state.terminal:
                beam.append(h)
                continue
            lf = canonical(from_actions(h.state.actions))
            if pruning and _has_idempotent_op(lf):
                continue
            key = str(lf)
            if key not in done or done[key].score < h.score:
                done[key] = ScoredForm(lf, h.score)
    if not done:
        log("decode: no completion within", max_actions, "actions")
    return sorted(done.values(), key=lambda s: (-s.score, size(s.form), str(s.form)))


# ---- Scorers ------------------------------------------------------------------
def constant_scorer() -> Scorer:
    """Scores every action 0: beam ties resolve to the shortest form."""
    def score(state: ParserState, action: Production, ctx: DecodeContext) -> float:
        return 0.0
    return score


class LexicalScorer:
    """+1 for a relation production cued by an unused trigger, +0.5 for the focus constant.

    A trigger preceding the anchor mention cues the converse relation. Each
    trigger occurrence is spent on one relation production; only the first
    constant of a derivation can earn the focus bonus.
    """
    def __init__(self, tokens: Sequence[str], triggers: Mapping[str, AllenRelation] | None = None):
        table = {k.lower(): v for k, v in (DEFAULT_TRIGGERS if triggers is None else triggers).items()}
        self.tokens = tuple(tokens)
        self.occurrences: tuple[tuple[int, AllenRelation], ...] = tuple(
            (i, table[t.lower()]) for i, t in enumerate(self.tokens) if t.lower() in table
        )

    def cued(self, ctx: DecodeContext) -> list[AllenRelation]:
        anchor = ctx.anchor_position
        return [
            r.converse if anchor is not None and anchor > pos else r
            for pos, r in self.occurrences
        ]

    def focus(self, ctx: DecodeContext) -> int | None:
        if self.occurrences:
            return self.occurrences[0][0]
        return ctx.anchor_position

    def focus_constant(self, ctx: DecodeContext) -> str | None:
        labels = ctx.vocabulary.labels
        if not labels:
            return None
        f = self.focus(ctx)
        if f is None or not ctx.positions:
            return labels[0]
        events = [l for l in labels if ctx.vocabulary.kind(l) is NodeKind.EVENT and l in ctx.positions]
        pool = events or [l for l in labels if l in ctx.positions] or list(labels)
        order = {l: i for i, l in enumerate(labels)}
        return min(pool, key=lambda l: (abs(ctx.positions.get(l, f) - f), order[l]))

    def __call__(self, state: ParserState, action: Production, ctx: DecodeContext) -> float:
        if action.lhs == FN1:
            r = AllenRelation(action.rhs[0])
            unused = self.cued(ctx)
            for prev in state.actions:
                if prev.lhs == FN1:
                    pr = AllenRelation(prev.rhs[0])
                    if pr in unused:
                        unused.remove(pr)
            return 1.0 if r in unused else 0.0
        if action.lhs == TI and not action.nonterminals:
            if any(p.lhs == TI and not p.nonterminals for p in state.actions):
                return 0.0
            return 0.5 if action.rhs[0] == self.focus_constant(ctx) else 0.0
        return 0.0


def lexical_scorer(tokens: Sequence[str], triggers: Mapping[str, AllenRelation] | None = None) -> LexicalScorer:
    return LexicalScorer(tokens, triggers)


def parse_triggers(table: Mapping[str, str]) -> dict[str, AllenRelation]:
    """`{"word": "relation"}` as read from a trigger file."""
    return {word.lower(): AllenRelation.parse(rel) for word, rel in table.items()}
