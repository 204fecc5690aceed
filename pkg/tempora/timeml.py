# tempora/timeml.py
"""TimeML ingestion: events, instances, timexes and TLINKs, plus gold networks.

TLINK endpoints are event-instance ids (``ei*``) or timex ids (``t*``); an
endpoint naming an event id directly resolves to that event's sole
instance. Links that cannot be resolved are dropped and reported in
``TimeMLDocument.warnings``.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable

from lxml import etree

from ._log import log
from .algebra import AllenRelation, RelationSet
from .dpd import GoldDenotation
from .errors import TimeMLError
from .network import ConstraintNetwork, NodeKind, Status
from .render import render

REL_TYPES: dict[str, AllenRelation] = {
    "BEFORE": AllenRelation.BEFORE,
    "AFTER": AllenRelation.AFTER,
    "IBEFORE": AllenRelation.MEETS,
    "IAFTER": AllenRelation.MET_BY,
    "INCLUDES": AllenRelation.CONTAINS,
    "IS_INCLUDED": AllenRelation.DURING,
    "DURING": AllenRelation.DURING,
    "DURING_INV": AllenRelation.CONTAINS,
    "SIMULTANEOUS": AllenRelation.EQUALS,
    "IDENTITY": AllenRelation.EQUALS,
    "BEGINS": AllenRelation.STARTS,
    "BEGUN_BY": AllenRelation.STARTED_BY,
    "ENDS": AllenRelation.FINISHES,
    "ENDED_BY": AllenRelation.FINISHED_BY,
}

_SOURCE_ATTRS = ("eventInstanceID", "timeID")
_TARGET_ATTRS = ("relatedToEventInstance", "relatedToTime")


def map_reltype(rel_type: str) -> AllenRelation:
    try:
        return REL_TYPES[rel_type.strip().upper()]
    except KeyError:
        raise TimeMLError(f"unknown TLINK relType: {rel_type!r}", rel_type=rel_type) from None


# ---- Document model ---------------------------------------------------------
@dataclass(frozen=True)
class Event:
    eid: str
    text: str
    cls: str
    start: int
    end: int


@dataclass(frozen=True)
class Instance:
    eiid: str
    eid: str
    attributes: tuple[tuple[str, str], ...] = ()  # tense, aspect, ... kept verbatim


@dataclass(frozen=True)
class Timex:
    tid: str
    text: str
    type: str
    value: str
    start: int | None = None  # None for document-creation times outside TEXT
    end: int | None = None

    @property
    def in_text(self) -> bool:
        return self.start is not None


@dataclass(frozen=True)
class TLink:
    lid: str
    source: str
    target: str
    rel_type: str

    @property
    def relation(self) -> AllenRelation:
        return map_reltype(self.rel_type)


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Sentence:
    index: int
    start: int
    end: int
    tokens: tuple[Token, ...]


@dataclass(frozen=True)
class Mention:
    """An instance or in-text timex, located in the sentence/token grid."""
    label: str
    kind: NodeKind
    start: int
    end: int
    sentence: int
    token: int


@dataclass
class TimeMLDocument:
    doc_id: str
    text: str
    events: list[Event] = field(default_factory=list)
    instances: list[Instance] = field(default_factory=list)
    timexes: list[Timex] = field(default_factory=list)
    tlinks: list[TLink] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list, compare=False)
    corpus: str | None = field(default=None, compare=False)

    @cached_property
    def _events(self) -> dict[str, Event]:
        return {e.eid: e for e in self.events}

    @cached_property
    def _instances(self) -> dict[str, Instance]:
        return {i.eiid: i for i in self.instances}

    @cached_property
    def _timexes(self) -> dict[str, Timex]:
        return {t.tid: t for t in self.timexes}

    @property
    def labels(self) -> list[str]:
        """Network node labels: instances first, then timexes."""
        return [i.eiid for i in self.instances] + [t.tid for t in self.timexes]

    def has_label(self, label: str) -> bool:
        return label in self._instances or label in self._timexes

    def kind(self, label: str) -> NodeKind:
        if label in self._instances:
            return NodeKind.EVENT
        if label in self._timexes:
            return NodeKind.TIMEX
        raise TimeMLError(f"unknown label in {self.doc_id}: {label!r}", doc=self.doc_id, label=label)

    def event_of(self, eiid: str) -> Event:
        return self._events[self._instances[eiid].eid]

    def span(self, label: str) -> tuple[int, int] | None:
        if self.kind(label) is NodeKind.EVENT:
            e = self.event_of(label)
            return e.start, e.end
        t = self._timexes[label]
        return (t.start, t.end) if t.in_text else None

    @cached_property
    def sentences(self) -> list[Sentence]:
        return split_sentences(self.text)

    @cached_property
    def mentions(self) -> list[Mention]:
        """Every label with a span in TEXT, in text order."""
        out: list[Mention] = []
        for label in self.labels:
            sp = self.span(label)
            if sp is None:
                continue
            s = _sentence_at(self.sentences, sp[0])
            if s is None:
                continue
            tok = next((k for k, t in enumerate(s.tokens) if t.end > sp[0]), len(s.tokens) - 1)
            out.append(Mention(label, self.kind(label), sp[0], sp[1], s.index, tok))
        out.sort(key=lambda m: (m.start, m.label))
        return out

    def mention(self, label: str) -> Mention | None:
        return next((m for m in self.mentions if m.label == label), None)

    def sentence_mentions(self, index: int) -> list[Mention]:
        return [m for m in self.mentions if m.sentence == index]

    def summary(self) -> dict[str, Any]:
        return {
            "doc": self.doc_id,
            "events": len(self.events),
            "instances": len(self.instances),
            "timexes": len(self.timexes),
            "tlinks": len(self.tlinks),
            "warnings": len(self.warnings),
        }


# ---- Text segmentation ------------------------------------------------------
_SENTENCE_BREAK = re.compile(r"(?<=[.?!])\s+")
_TOKEN = re.compile(r"\w+|[^\w\s]")


def split_sentences(text: str) -> list[Sentence]:
    """Sentences on terminal punctuation; tokens keep character offsets into `text`."""
    out: list[Sentence] = []
    pos = 0
    bounds = [(m.start(), m.end()) for m in _SENTENCE_BREAK.finditer(text)] + [(len(text), len(text))]
    for end, resume in bounds:
        chunk = text[pos:end]
        start = pos + len(chunk) - len(chunk.lstrip())
        tokens = tuple(Token(m.group(), m.start(), m.end()) for m in _TOKEN.finditer(text, start, end))
        if tokens:
            out.append(Sentence(len(out), start, end, tokens))
        pos = resume
    return out


def _sentence_at(sentences: list[Sentence], offset: int) -> Sentence | None:
    for s in sentences:
        if s.start <= offset < s.end:
            return s
    return None


# ---- Parsing ----------------------------------------------------------------
def _local(el) -> str:
    return etree.QName(el).localname


def parse_document(xml: str | bytes, doc_id: str | None = None, *, corpus: str | None = None) -> TimeMLDocument:
    """Parse one TimeML / TempEval-3 document; `doc_id` is used only when there is no DOCID.

    Unknown elements and attributes are ignored.
    """
    data = xml.encode("utf-8") if isinstance(xml, str) else xml
    parser = etree.XMLParser(remove_comments=True, remove_pis=True, resolve_entities=False)
    try:
        root = etree.fromstring(data, parser)
    except etree.XMLSyntaxError as e:
        raise TimeMLError(f"malformed TimeML{f' in {doc_id}' if doc_id else ''}: {e}", doc=doc_id) from None

    docid_el = next((el for el in root.iter() if isinstance(el.tag, str) and _local(el) == "DOCID"), None)
    doc_id = (docid_el.text.strip() if docid_el is not None and docid_el.text else None) or doc_id
    if not doc_id:
        raise TimeMLError("document has no DOCID and no id was given")

    text_el = next((el for el in root.iter() if isinstance(el.tag, str) and _local(el) == "TEXT"), None)
    if text_el is None:
        raise TimeMLError(f"{doc_id}: no TEXT element", doc=doc_id)

    warnings: list[str] = []
    events: list[Event] = []
    timexes: list[Timex] = []
    seen: set[str] = set()

    def claim(ident: str | None, what: str) -> bool:
        if not ident:
            warnings.append(f"{what} without an id skipped")
            return False
        if ident in seen:
            warnings.append(f"duplicate id {ident!r} skipped")
            return False
        seen.add(ident)
        return True

    # document-creation and other out-of-TEXT timexes
    for el in root.iter():
        if not isinstance(el.tag, str) or _local(el) != "TIMEX3":
            continue
        if any(a is text_el for a in el.iterancestors()):
            continue
        tid = el.get("tid")
        if claim(tid, "TIMEX3"):
            timexes.append(Timex(tid, "".join(el.itertext()), el.get("type", ""), el.get("value", "")))

    # in-text mentions with character offsets
    offset = 0
    starts: dict[int, int] = {}
    for action, el in etree.iterwalk(text_el, events=("start", "end")):
        name = _local(el)
        if action == "start":
            starts[id(el)] = offset
            offset += len(el.text or "")
            continue
        begin = starts.pop(id(el))
        if name == "EVENT" and el is not text_el:
            eid = el.get("eid")
            if claim(eid, "EVENT"):
                events.append(Event(eid, "".join(el.itertext()), el.get("class", ""), begin, offset))
        elif name == "TIMEX3":
            tid = el.get("tid")
            if claim(tid, "TIMEX3"):
                timexes.append(Timex(tid, "".join(el.itertext()), el.get("type", ""), el.get("value", ""), begin, offset))
        if el is not text_el:
            offset += len(el.tail or "")
    text = "".join(text_el.itertext())

    event_ids = {e.eid for e in events}
    instances: list[Instance] = []
    by_eid: dict[str, list[str]] = {}
    for el in root.iter():
        if not isinstance(el.tag, str) or _local(el) != "MAKEINSTANCE":
            continue
        eiid, eid = el.get("eiid"), el.get("eventID")
        if eid not in event_ids:
            warnings.append(f"MAKEINSTANCE {eiid!r} refers to unknown event {eid!r}")
            continue
        if not claim(eiid, "MAKEINSTANCE"):
            continue
        attrs = tuple((k, v) for k, v in el.attrib.items() if k not in ("eiid", "eventID"))
        instances.append(Instance(eiid, eid, attrs))
        by_eid.setdefault(eid, []).append(eiid)

    nodes = {i.eiid for i in instances} | {t.tid for t in timexes}

    def resolve(ref: str | None) -> str | None:
        if ref in nodes:
            return ref
        sole = by_eid.get(ref or "", [])
        return sole[0] if len(sole) == 1 else None

    tlinks: list[TLink] = []
    for el in root.iter():
        if not isinstance(el.tag, str) or _local(el) != "TLINK":
            continue
        lid = el.get("lid", f"l?{len(tlinks)}")
        rel_type = (el.get("relType") or "").strip().upper()
        if rel_type not in REL_TYPES:
            warnings.append(f"{lid}: unknown relType {el.get('relType')!r}")
            continue
        src_ref = next((el.get(a) for a in _SOURCE_ATTRS if el.get(a)), None)
        tgt_ref = next((el.get(a) for a in _TARGET_ATTRS if el.get(a)), None)
        src, tgt = resolve(src_ref), resolve(tgt_ref)
        if src is None or tgt is None:
            bad = src_ref if src is None else tgt_ref
            warnings.append(f"{lid}: unresolved endpoint {bad!r}")
            continue
        if src == tgt:
            warnings.append(f"{lid}: source and target are both {src!r}")
            continue
        tlinks.append(TLink(lid, src, tgt, rel_type))

    for w in warnings:
        log(f"{doc_id}:", w)
    return TimeMLDocument(doc_id, text, events, instances, timexes, tlinks, warnings, corpus)


def load_document(path: str | Path, *, corpus: str | None = None) -> TimeMLDocument:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as e:
        raise TimeMLError(f"cannot read {p}: {e.strerror}", path=str(p)) from None
    return parse_document(data, p.stem, corpus=corpus)


def load_corpus(path: str | Path, pattern: str = "*.tml", *, corpus: str | None = None) -> list[TimeMLDocument]:
    """Every matching file under `path` (or the single file `path`), sorted by name."""
    p = Path(path)
    if p.is_file():
        files = [p]
    elif p.is_dir():
        files = sorted(p.rglob(pattern))
    else:
        raise TimeMLError(f"corpus path not found: {p}", path=str(p))
    docs = [load_document(f, corpus=corpus) for f in files]
    ids = [d.doc_id for d in docs]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise TimeMLError(f"duplicate document ids: {', '.join(dupes)}", docs=dupes)
    log(f"loaded {len(docs)} documents from {p}")
    return docs


# ---- Gold ---------------------------------------------------------------------
def gold_network(doc: TimeMLDocument) -> ConstraintNetwork:
    """Assert TLINKs in document order, propagating after each; stop at the first conflict."""
    net = ConstraintNetwork()
    for i in doc.instances:
        net.add_node(NodeKind.EVENT, i.eiid)
    for t in doc.timexes:
        net.add_node(NodeKind.TIMEX, t.tid)
    net.propagate()
    for link in doc.tlinks:
        net.assert_labels(link.source, link.target, RelationSet.of(link.relation), tag=link.lid)
        if net.propagate() is Status.INCONSISTENT:
            log(f"{doc.doc_id}: gold inconsistent at {link.lid}")
            break
    return net


def gold_denotation(doc: TimeMLDocument, anchor: str, *, network: ConstraintNetwork | None = None) -> GoldDenotation:
    """Singleton propagated relations of `anchor` to every other label."""
    if not doc.has_label(anchor):
        raise TimeMLError(f"unknown anchor in {doc.doc_id}: {anchor!r}", doc=doc.doc_id, anchor=anchor)
    net = network or gold_network(doc)
    if net.status is not Status.CONSISTENT:
        raise TimeMLError(
            f"gold for {doc.doc_id} is inconsistent (first conflict at {net.conflict}); "
            "repair the TLINKs before deriving denotations",
            doc=doc.doc_id, conflict=net.conflict,
        )
    a = net.node_id(anchor)
    out: dict[str, RelationSet] = {}
    for label in doc.labels:
        if label == anchor:
            continue
        r = net.relation_between(a, net.node_id(label))
        if r.is_singleton:
            out[label] = r
    return GoldDenotation(out)


GoldPair = tuple[str, str, AllenRelation]


def gold_pairs(doc: TimeMLDocument, *, closure: bool = False, network: ConstraintNetwork | None = None) -> list[GoldPair]:
    """Raw links, or with `closure` every singleton pair of a consistent gold network."""
    raw = [(l.source, l.target, l.relation) for l in doc.tlinks]
    if not closure:
        return raw
    net = network or gold_network(doc)
    if net.status is not Status.CONSISTENT:
        return raw
    out: list[GoldPair] = []
    labels = doc.labels
    for x in range(len(labels)):
        for y in range(x + 1, len(labels)):
            r = net.relation_between(net.node_id(labels[x]), net.node_id(labels[y]))
            if r.is_singleton:
                out.append((labels[x], labels[y], r.only()))
    return out


# ---- Corpus manifest ----------------------------------------------------------
def split_corpus(doc_ids: Iterable[str], fraction: float, seed: int) -> dict[str, str]:
    """Deterministic train/validation assignment."""
    if not 0.0 <= fraction < 1.0:
        raise TimeMLError(f"validation fraction must be in [0, 1), got {fraction}", fraction=fraction)
    ids = sorted(doc_ids)
    random.Random(seed).shuffle(ids)
    held = set(ids[: round(len(ids) * fraction)])
    return {d: ("validation" if d in held else "train") for d in sorted(ids)}


def manifest(docs: list[TimeMLDocument], *, split: dict[str, str] | None = None) -> dict[str, Any]:
    per_doc: list[dict[str, Any]] = []
    for d in docs:
        net = gold_network(d)
        row = {**d.summary(), "status": net.status.value, "corpus": d.corpus}
        if net.conflict:
            row["conflict"] = net.conflict
        if split is not None:
            row["split"] = split.get(d.doc_id, "train")
        if d.warnings:
            row["warning_messages"] = list(d.warnings)
        per_doc.append(row)
    totals = {
        k: sum(r[k] for r in per_doc)
        for k in ("events", "instances", "timexes", "tlinks", "warnings")
    }
    return {
        "documents": len(docs),
        **totals,
        "inconsistent": sum(1 for r in per_doc if r["status"] == Status.INCONSISTENT.value),
        "docs": per_doc,
    }


# ---- Serialization ------------------------------------------------------------
def _segments(doc: TimeMLDocument) -> list[dict[str, Any]]:
    spans = sorted(
        [(e.start, e.end, "event", e) for e in doc.events]
        + [(t.start, t.end, "timex", t) for t in doc.timexes if t.in_text],
        key=lambda s: (s[0], s[1]),
    )
    out: list[dict[str, Any]] = []
    pos = 0
    for start, end, kind, item in spans:
        if start < pos:
            log(f"{doc.doc_id}: nested mention {kind} at {start} not re-serialized")
            continue
        if start > pos:
            out.append({"kind": "text", "text": doc.text[pos:start]})
        out.append({"kind": kind, "item": item})
        pos = end
    if pos < len(doc.text):
        out.append({"kind": "text", "text": doc.text[pos:]})
    return out


def to_timeml(doc: TimeMLDocument) -> str:
    """Re-serialize the extracted structure; `parse_document` reads it back unchanged."""
    timex_ids = {t.tid for t in doc.timexes}
    links = [
        {
            "lid": l.lid,
            "rel_type": l.rel_type,
            "source_attr": "timeID" if l.source in timex_ids else "eventInstanceID",
            "source": l.source,
            "target_attr": "relatedToTime" if l.target in timex_ids else "relatedToEventInstance",
            "target": l.target,
        }
        for l in doc.tlinks
    ]
    return render(
        "timeml.tml",
        doc=doc,
        dct=[t for t in doc.timexes if not t.in_text],
        segments=_segments(doc),
        links=links,
    )
