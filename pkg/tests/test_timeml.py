"""Test TimeML ingestion, gold networks, gold denotations and the corpus manifest."""
import json
import pytest

from tempora.algebra import AllenRelation, RelationSet
from tempora.errors import TimeMLError
from tempora.network import NodeKind, Status
from tempora.timeml import (
    REL_TYPES, gold_denotation, gold_network, gold_pairs, load_corpus, load_document,
    manifest, map_reltype, parse_document, split_corpus, split_sentences, to_timeml,
)

A = AllenRelation


def _doc(text: str, links: str = "", instances: str = "", extra: str = "") -> str:
    return f"""<?xml version="1.0" ?>
<TimeML>
<DOCID>d1</DOCID>
{extra}
<TEXT>{text}</TEXT>
{instances}
{links}
</TimeML>"""


TWO_EVENTS = (
    'Sales <EVENT eid="e1" class="OCCURRENCE">fell</EVENT> and jobs <EVENT eid="e2" class="OCCURRENCE">vanished</EVENT>.'
)
TWO_INSTANCES = '<MAKEINSTANCE eventID="e1" eiid="ei1" tense="PAST"/><MAKEINSTANCE eventID="e2" eiid="ei2" tense="PAST"/>'


def test_map_reltype_covers_the_closed_list():
    """All 14 relTypes map onto Allen relations; unknown names are rejected."""
    assert len(REL_TYPES) == 14
    assert map_reltype("BEFORE") is A.BEFORE
    assert map_reltype("IBEFORE") is A.MEETS
    assert map_reltype("IDENTITY") is A.EQUALS
    assert map_reltype("during_inv") is A.CONTAINS
    with pytest.raises(TimeMLError) as exc:
        map_reltype("OVERLAP")
    assert "OVERLAP" in str(exc.value)


def test_reltype_pairs_are_converses():
    """Inverse relTypes map to converse relations."""
    pairs = [("BEFORE", "AFTER"), ("IBEFORE", "IAFTER"), ("INCLUDES", "IS_INCLUDED"),
             ("DURING", "DURING_INV"), ("BEGINS", "BEGUN_BY"), ("ENDS", "ENDED_BY")]
    for a, b in pairs:
        assert map_reltype(a).converse is map_reltype(b)
    assert map_reltype("SIMULTANEOUS").converse is A.EQUALS


def test_parse_minimal_document():
    """One event, one instance, no links."""
    doc = parse_document(_doc(
        'Stocks <EVENT eid="e1" class="OCCURRENCE">rose</EVENT>.',
        instances='<MAKEINSTANCE eventID="e1" eiid="ei1" tense="PAST" aspect="NONE"/>',
    ))
    assert doc.doc_id == "d1"
    assert len(doc.events) == 1 and len(doc.instances) == 1 and doc.tlinks == []
    assert doc.text == "Stocks rose."
    e = doc.events[0]
    assert doc.text[e.start:e.end] == "rose"
    assert doc.instances[0].attributes == (("tense", "PAST"), ("aspect", "NONE"))


def test_parse_before_link():
    """A BEFORE TLINK between two instances."""
    doc = parse_document(_doc(
        TWO_EVENTS, instances=TWO_INSTANCES,
        links='<TLINK lid="l1" relType="BEFORE" eventInstanceID="ei1" relatedToEventInstance="ei2"/>',
    ))
    assert len(doc.tlinks) == 1
    link = doc.tlinks[0]
    assert (link.source, link.target, link.relation) == ("ei1", "ei2", A.BEFORE)
    assert doc.warnings == []


def test_dangling_link_dropped_with_warning():
    """A link to a missing instance is dropped and reported."""
    doc = parse_document(_doc(
        TWO_EVENTS, instances=TWO_INSTANCES,
        links='<TLINK lid="l1" relType="BEFORE" eventInstanceID="ei1" relatedToEventInstance="ei9"/>',
    ))
    assert doc.tlinks == []
    assert doc.warnings == ["l1: unresolved endpoint 'ei9'"]


def test_event_id_endpoint_resolves_to_sole_instance():
    """TLINKs naming an eid use that event's only instance."""
    doc = parse_document(_doc(
        TWO_EVENTS, instances=TWO_INSTANCES,
        links='<TLINK lid="l1" relType="AFTER" eventInstanceID="e2" relatedToEventInstance="ei1"/>',
    ))
    assert [(l.source, l.target) for l in doc.tlinks] == [("ei2", "ei1")]


def test_self_links_unknown_reltypes_and_orphans_warn():
    """Links to themselves, unknown relTypes and orphan instances are reported."""
    doc = parse_document(_doc(
        TWO_EVENTS,
        instances=TWO_INSTANCES + '<MAKEINSTANCE eventID="e7" eiid="ei7"/>',
        links=(
            '<TLINK lid="l1" relType="BEFORE" eventInstanceID="ei1" relatedToEventInstance="ei1"/>'
            '<TLINK lid="l2" relType="VAGUE" eventInstanceID="ei1" relatedToEventInstance="ei2"/>'
        ),
    ))
    assert doc.tlinks == []
    assert len(doc.warnings) == 3
    assert any("unknown event 'e7'" in w for w in doc.warnings)


def test_malformed_xml_and_missing_text():
    """Broken XML and documents without TEXT are errors."""
    with pytest.raises(TimeMLError):
        parse_document("<TimeML><TEXT>oops</TimeML>", "bad")
    with pytest.raises(TimeMLError):
        parse_document("<TimeML><DOCID>x</DOCID></TimeML>")


def test_docid_fallback():
    """Without DOCID the given id is used."""
    doc = parse_document("<TimeML><TEXT>Nothing happened.</TEXT></TimeML>", "from_name")
    assert doc.doc_id == "from_name"
    with pytest.raises(TimeMLError):
        parse_document("<TimeML><TEXT>Nothing happened.</TEXT></TimeML>")


def test_split_sentences_offsets():
    """Sentences split on terminal punctuation; tokens keep their offsets."""
    text = "Prices fell. Then they rose again!"
    sents = split_sentences(text)
    assert [s.index for s in sents] == [0, 1]
    assert [t.text for t in sents[0].tokens] == ["Prices", "fell", "."]
    tok = sents[1].tokens[1]
    assert text[tok.start:tok.end] == "they"


def test_fixture_corpus_matches_manifest(corpus, fixtures_dir):
    """Counts and statuses of the fixture corpus are as recorded."""
    expected = json.loads((fixtures_dir / "manifest.json").read_text())
    assert manifest(corpus) == expected


def test_every_reltype_in_fixtures(corpus):
    """The fixture corpus exercises the whole relType list."""
    seen = {l.rel_type for d in corpus for l in d.tlinks}
    assert seen == set(REL_TYPES)


def test_mentions_and_sentences(docs):
    """Mentions carry sentence and token positions."""
    doc = docs["wsj_0001"]
    assert [m.label for m in doc.sentence_mentions(0)] == ["ei1", "ei2"]
    assert [m.label for m in doc.sentence_mentions(1)] == ["ei3", "ei4", "t1"]
    m = doc.mention("ei1")
    assert doc.sentences[0].tokens[m.token].text == "announced"
    assert doc.mention("t0") is None
    assert doc.kind("t1") is NodeKind.TIMEX


def test_gold_network_chain(docs):
    """Chained BEFORE links propagate."""
    net = gold_network(docs["wsj_0001"])
    assert net.status is Status.CONSISTENT
    assert net.relation_between(net.node_id("ei1"), net.node_id("ei3")) == RelationSet.of(A.BEFORE)


def test_gold_network_inconsistent(docs):
    """A strict cycle is flagged with the first offending link."""
    net = gold_network(docs["wsj_0004"])
    assert net.status is Status.INCONSISTENT
    assert net.conflict == "l3"


def test_gold_network_without_links():
    """No links, no information."""
    doc = parse_document(_doc(TWO_EVENTS, instances=TWO_INSTANCES))
    net = gold_network(doc)
    assert net.status is Status.CONSISTENT
    assert net.edges() == []


def test_gold_denotation(docs):
    """Singleton relations of the anchor to every other label."""
    gold = gold_denotation(docs["wsj_0001"], "ei1")
    assert gold.to_dict() == {"ei2": "before", "ei3": "before", "ei4": "before", "t1": "meets"}
    # the document-creation time is unconstrained
    assert len(gold_denotation(docs["wsj_0001"], "t0")) == 0


def test_gold_denotation_errors(docs):
    """Unknown anchors and inconsistent gold are rejected."""
    with pytest.raises(TimeMLError):
        gold_denotation(docs["wsj_0001"], "ei99")
    with pytest.raises(TimeMLError) as exc:
        gold_denotation(docs["wsj_0004"], "ei1")
    assert exc.value.details["conflict"] == "l3"


def test_gold_pairs_raw_and_closure(docs):
    """Closure adds every singleton pair of consistent gold; inconsistent gold stays raw."""
    doc = docs["wsj_0001"]
    raw = gold_pairs(doc)
    assert len(raw) == 4
    closed = gold_pairs(doc, closure=True)
    assert ("ei1", "ei3", A.BEFORE) in closed
    assert ("ei1", "t1", A.MEETS) in closed
    assert len(closed) > len(raw)
    assert gold_pairs(docs["wsj_0004"], closure=True) == gold_pairs(docs["wsj_0004"])


def test_round_trip_through_serialization(corpus):
    """Re-serialized documents parse back to the same structure."""
    for doc in corpus:
        again = parse_document(to_timeml(doc))
        assert again == doc


def test_load_corpus_single_file_and_errors(timeml_dir, tmp_path):
    """A file path loads one document; missing paths and duplicate ids fail."""
    docs = load_corpus(timeml_dir / "wsj_0002.tml", corpus="tb")
    assert [d.doc_id for d in docs] == ["wsj_0002"]
    assert docs[0].corpus == "tb"
    with pytest.raises(TimeMLError):
        load_corpus(tmp_path / "nowhere")
    # Two files declaring the same DOCID
    for name in ("a.tml", "b.tml"):
        (tmp_path / name).write_text((timeml_dir / "wsj_0001.tml").read_text())
    with pytest.raises(TimeMLError):
        load_corpus(tmp_path)


def test_load_document_uses_file_stem(tmp_path):
    """Files without DOCID are named after the file."""
    p = tmp_path / "story_7.tml"
    p.write_text("<TimeML><TEXT>Nothing happened.</TEXT></TimeML>")
    assert load_document(p).doc_id == "story_7"


def test_split_corpus_is_deterministic():
    """Same ids, fraction and seed give the same split."""
    ids = [f"doc{i}" for i in range(10)]
    first = split_corpus(ids, 0.3, seed=1)
    assert first == split_corpus(reversed(ids), 0.3, seed=1)
    assert sum(1 for v in first.values() if v == "validation") == 3
    with pytest.raises(TimeMLError):
        split_corpus(ids, 1.0, seed=1)


def test_manifest_with_split(corpus):
    """The split is recorded per document."""
    m = manifest(corpus, split=split_corpus([d.doc_id for d in corpus], 0.5, seed=0))
    assert sorted(r["split"] for r in m["docs"]) == ["train", "train", "validation", "validation"]
