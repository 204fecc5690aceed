"""Test the grammar-constrained transition system, beam search and lexical scoring."""
import pytest

from tempora.algebra import AllenRelation
from tempora.decoder import (
    DEFAULT_TRIGGERS, DecodeContext, LexicalScorer, ParserState, beam_search, canonical,
    constant_scorer, initial_state, lexical_scorer, parse_triggers, step, valid_actions,
)
from tempora.dpd import SearchConfig, enumerate_forms
from tempora.errors import DecodeError, RelationError
from tempora.lang import (
    APPLY1_RULE, APPLY2_RULE, RELATION_RULES, START_RULE, TI, Vocabulary, constant_rule,
    from_actions, parse_sexpr, to_actions,
)

A = AllenRelation
V1 = Vocabulary.infer(["ei1"])
V2 = Vocabulary.infer(["ei1", "ei2"])


def _after_start() -> ParserState:
    return step(initial_state(), START_RULE)


def _prefers_constants(state, action, ctx) -> float:
    return 1.0 if action.lhs == TI and not action.nonterminals else 0.0


def test_initial_state_only_starts():
    """The only move from START is START -> TimeInterval."""
    assert valid_actions(initial_state(), V2, 12) == [START_RULE]


def test_valid_actions_respect_budget():
    """Function applications are offered only when they can still complete."""
    s = _after_start()
    constants = [constant_rule("ei1"), constant_rule("ei2")]
    assert valid_actions(s, V2, 2) == constants
    assert valid_actions(s, V2, 4) == constants + [APPLY1_RULE]
    assert valid_actions(s, V2, 5) == constants + [APPLY1_RULE, APPLY2_RULE]


def test_valid_actions_pending_siblings_reserve_budget():
    """The second argument of a set operation keeps room for itself."""
    s = step(_after_start(), APPLY2_RULE)
    s = step(s, next(a for a in valid_actions(s, V2, 5)))
    assert s.frontier == (TI, TI)
    # one action for each pending interval, nothing left for nesting
    assert valid_actions(s, V2, 5) == [constant_rule("ei1"), constant_rule("ei2")]


def test_valid_actions_prune_equals_and_chains():
    """equals is never generated; (before (g X)) is pruned when before ∘ g is before."""
    s = step(step(_after_start(), APPLY1_RULE), RELATION_RULES[A.BEFORE])
    s = step(s, APPLY1_RULE)
    pruned = valid_actions(s, V1, 12)
    assert RELATION_RULES[A.BEFORE] not in pruned
    assert RELATION_RULES[A.EQUALS] not in pruned
    # before ∘ overlaps is before
    assert RELATION_RULES[A.OVERLAPS] not in pruned
    assert RELATION_RULES[A.DURING] in pruned
    full = valid_actions(s, V1, 12, pruning=False)
    assert RELATION_RULES[A.BEFORE] in full
    assert RELATION_RULES[A.EQUALS] in full


def test_step_and_terminal_states():
    """Steps must expand the frontier top; terminal states offer nothing."""
    with pytest.raises(DecodeError):
        step(initial_state(), constant_rule("ei1"))
    done = step(_after_start(), constant_rule("ei1"))
    assert done.terminal and done.length == 2
    assert valid_actions(done, V1) == []
    with pytest.raises(DecodeError):
        step(done, START_RULE)
    with pytest.raises(DecodeError):
        done.top


def test_replayed_steps_rebuild_the_form():
    """Stepping through a form's actions ends terminal with the same actions."""
    lf = parse_sexpr("(intersection (before ei1) (after ei2))")
    s = initial_state()
    for a in to_actions(lf):
        assert a in valid_actions(s, V2, 9)
        s = step(s, a)
    assert s.terminal
    assert from_actions(s.actions) == lf


def test_beam_search_argument_errors():
    """Beam width, bound and vocabulary are checked up front."""
    ctx = DecodeContext(("x",), V1)
    with pytest.raises(DecodeError):
        beam_search(ctx, constant_scorer(), beam_width=0)
    with pytest.raises(DecodeError):
        beam_search(ctx, constant_scorer(), max_actions=1)
    with pytest.raises(DecodeError):
        beam_search(DecodeContext(("x",), Vocabulary(())), constant_scorer())


def test_greedy_constant_preference():
    """Beam 1 with a constant-preferring scorer stops at the first constant."""
    ctx = DecodeContext(("x",), V2)
    ranked = beam_search(ctx, _prefers_constants, beam_width=1, max_actions=12)
    assert str(ranked[0].form) == "ei1"
    # zero scores behave the same way: completed hypotheses win ties
    assert [str(s.form) for s in beam_search(ctx, constant_scorer(), 1, 12)] == ["ei1"]


@pytest.mark.parametrize("bound", [4, 5, 6, 7])
def test_exhaustive_beam_equals_enumeration(bound):
    """A wide enough beam completes exactly the enumerated forms."""
    ctx = DecodeContext(("x",), V2)
    for pruning in (True, False):
        ranked = beam_search(ctx, constant_scorer(), 100_000, bound, pruning=pruning)
        decoded = {str(s.form) for s in ranked}
        enumerated = {str(lf) for lf in enumerate_forms(V2, SearchConfig(max_actions=bound, pruning=pruning))}
        assert decoded == enumerated


def test_results_sorted_and_canonical():
    """Best score first, then fewer actions, then text; set-op arguments canonical."""
    ctx = DecodeContext(("x",), V2)
    ranked = beam_search(ctx, constant_scorer(), 1000, 5)
    keys = [(-s.score, len(to_actions(s.form)), str(s.form)) for s in ranked]
    assert keys == sorted(keys)
    assert all(canonical(s.form) == s.form for s in ranked)
    assert ranked[0].to_dict() == {"form": "ei1", "score": 0.0}


def test_lexical_before_cue():
    """"before" in the sentence: (before ei1) at 1.5."""
    tokens = ("Prices", "fell", "before", "the", "report", ".")
    ctx = DecodeContext(tokens, V1)
    ranked = beam_search(ctx, lexical_scorer(tokens), beam_width=5, max_actions=4)
    assert str(ranked[0].form) == "(before ei1)"
    assert ranked[0].score == 1.5


def test_lexical_without_triggers_prefers_constant():
    """No cue: the bare focus constant wins."""
    tokens = ("Nothing", "happened", ".")
    ctx = DecodeContext(tokens, Vocabulary.infer(["ei1", "t1"]))
    ranked = beam_search(ctx, lexical_scorer(tokens), beam_width=10, max_actions=12)
    assert str(ranked[0].form) == "ei1"
    assert ranked[0].score == 0.5


def test_trigger_before_anchor_cues_converse():
    """"After the storm hit, residents fled": relative to fled, hit is before."""
    tokens = ("After", "the", "storm", "hit", ",", "residents", "fled", ".")
    vocab = Vocabulary.infer(["ei2"])
    ctx = DecodeContext(tokens, vocab, {"ei2": 3}, anchor_position=6)
    scorer = LexicalScorer(tokens)
    assert scorer.cued(ctx) == [A.BEFORE]
    s = step(_after_start(), APPLY1_RULE)
    assert scorer(s, RELATION_RULES[A.BEFORE], ctx) == 1.0
    assert scorer(s, RELATION_RULES[A.AFTER], ctx) == 0.0
    assert str(beam_search(ctx, scorer, 5, 4)[0].form) == "(before ei2)"
    # without an anchor position the cue reads as written
    unanchored = DecodeContext(tokens, vocab, {"ei2": 3})
    assert scorer.cued(unanchored) == [A.AFTER]


def test_trigger_is_spent_once():
    """A single cue credits one relation production."""
    tokens = ("before",)
    ctx = DecodeContext(tokens, V1)
    scorer = LexicalScorer(tokens)
    s = step(step(_after_start(), APPLY1_RULE), RELATION_RULES[A.BEFORE])
    s = step(s, APPLY1_RULE)
    assert scorer(s, RELATION_RULES[A.BEFORE], ctx) == 0.0
    assert scorer(step(_after_start(), APPLY1_RULE), RELATION_RULES[A.BEFORE], ctx) == 1.0


def test_focus_constant_nearest_event():
    """The event nearest the trigger earns the constant bonus."""
    tokens = ("A", "fell", "x", "x", "before", "B", "rose")
    vocab = Vocabulary.infer(["ei1", "ei2", "t1"])
    ctx = DecodeContext(tokens, vocab, {"ei1": 1, "ei2": 6, "t1": 4})
    scorer = LexicalScorer(tokens)
    assert scorer.focus_constant(ctx) == "ei2"
    assert scorer(_after_start(), constant_rule("ei2"), ctx) == 0.5
    assert scorer(_after_start(), constant_rule("ei1"), ctx) == 0.0


def test_trigger_tables():
    """Default table and file overrides."""
    assert DEFAULT_TRIGGERS["while"] is A.DURING
    assert DEFAULT_TRIGGERS["when"] is A.EQUALS
    assert parse_triggers({"Until": "meets", "once": "AFTER"}) == {"until": A.MEETS, "once": A.AFTER}
    with pytest.raises(RelationError):
        parse_triggers({"soon": "later"})
    custom = LexicalScorer(("Once", "it", "rained"), {"once": A.AFTER})
    assert custom.cued(DecodeContext(custom.tokens, V1)) == [A.AFTER]


def test_decoding_is_deterministic():
    """Same context, same ranking."""
    tokens = ("Prices", "fell", "before", "the", "report", ".")
    ctx = DecodeContext(tokens, V2, {"ei1": 1, "ei2": 4}, anchor_position=1)
    first = beam_search(ctx, lexical_scorer(tokens), 10, 9)
    second = beam_search(ctx, lexical_scorer(tokens), 10, 9)
    assert first == second
