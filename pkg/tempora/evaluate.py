# tempora/evaluate.py
"""Relation-only recall over gold TLINKs.

A gold link (a, b, r) is matched when the prediction for (a, b), or the
converse of the prediction for (b, a), equals {r} (strict) or contains r
(lax). Predicted pairs with no gold link are counted but do not affect
recall.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from ._log import log
from .algebra import AllenRelation, RelationSet, converse
from .errors import InputError
from .network import Status
from .records import Record
from .render import render
from .timeml import TimeMLDocument, gold_network, gold_pairs

MODES = ("strict", "lax")

PredictedPair = tuple[str, str, RelationSet]
Predictions = Mapping[str, list[PredictedPair]]


def _recall(matched: int, gold: int) -> float | None:
    return round(matched / gold, 6) if gold else None


@dataclass
class DocScore:
    doc: str
    status: str
    gold: int = 0
    predicted: int = 0
    matched: int = 0
    predicted_not_gold: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def recall(self) -> float | None:
        return _recall(self.matched, self.gold)

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc": self.doc,
            "status": self.status,
            "gold": self.gold,
            "predicted": self.predicted,
            "matched": self.matched,
            "recall": self.recall,
            "predicted_not_gold": self.predicted_not_gold,
            "warnings": list(self.warnings),
        }


@dataclass
class EvalReport:
    mode: str
    closure: bool = False
    docs: list[DocScore] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def gold(self) -> int:
        return sum(d.gold for d in self.docs)

    @property
    def predicted(self) -> int:
        return sum(d.predicted for d in self.docs)

    @property
    def matched(self) -> int:
        return sum(d.matched for d in self.docs)

    @property
    def predicted_not_gold(self) -> int:
        return sum(d.predicted_not_gold for d in self.docs)

    @property
    def recall(self) -> float | None:
        return _recall(self.matched, self.gold)

    def doc(self, doc_id: str) -> DocScore:
        return next(d for d in self.docs if d.doc == doc_id)

    def to_dict(self, config: Mapping[str, Any] | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "mode": self.mode,
            "closure": self.closure,
            "documents": len(self.docs),
            "gold": self.gold,
            "predicted": self.predicted,
            "matched": self.matched,
            "recall": self.recall,
            "predicted_not_gold": self.predicted_not_gold,
            "inconsistent": [d.doc for d in self.docs if d.status == Status.INCONSISTENT.value],
            "warnings": list(self.warnings),
            "docs": [d.to_dict() for d in self.docs],
        }
        if config is not None:
            out["config"] = dict(config)
        return out

    def to_text(self) -> str:
        width = max([len("document")] + [len(d.doc) for d in self.docs])
        return render("report.txt", report=self, width=width, fmt=_fmt_recall)


def _fmt_recall(r: float | None) -> str:
    return "n/a" if r is None else f"{r:.3f}"


def _matches(pred: RelationSet | None, gold: AllenRelation, mode: str) -> bool:
    if pred is None:
        return False
    if mode == "lax":
        return gold in pred
    return pred == RelationSet.of(gold)


def score_document(
    doc: TimeMLDocument,
    predicted: Iterable[PredictedPair] | None,
    *,
    mode: str = "strict",
    closure: bool = False,
) -> DocScore:
    net = gold_network(doc)
    gold = gold_pairs(doc, closure=closure, network=net)
    out = DocScore(doc.doc_id, net.status.value, gold=len(gold))
    if predicted is None:
        out.warnings.append("no predictions for document")
        predicted = []

    lookup: dict[tuple[str, str], RelationSet] = {}
    for src, tgt, rel in predicted:
        for label in (src, tgt):
            if not doc.has_label(label):
                out.warnings.append(f"prediction mentions unknown label {label!r}")
        lookup[src, tgt] = rel
    out.predicted = len(lookup)

    gold_keys: set[tuple[str, str]] = set()
    for src, tgt, rel in gold:
        gold_keys.add((src, tgt))
        gold_keys.add((tgt, src))
        p = lookup.get((src, tgt))
        if p is None and (tgt, src) in lookup:
            p = converse(lookup[tgt, src])
        if _matches(p, rel, mode):
            out.matched += 1
    out.predicted_not_gold = sum(1 for k in lookup if k not in gold_keys)
    return out


def evaluate(
    docs: Iterable[TimeMLDocument],
    predictions: Predictions,
    *,
    mode: str = "strict",
    closure: bool = False,
) -> EvalReport:
    if mode not in MODES:
        raise InputError(f"match mode must be one of {', '.join(MODES)}, got {mode!r}", mode=mode)
    report = EvalReport(mode, closure)
    seen: set[str] = set()
    for doc in sorted(docs, key=lambda d: d.doc_id):
        seen.add(doc.doc_id)
        report.docs.append(score_document(doc, predictions.get(doc.doc_id), mode=mode, closure=closure))
    for doc_id in sorted(set(predictions) - seen):
        report.warnings.append(f"predictions for unknown document {doc_id!r}")
    log(f"eval {mode}: matched {report.matched}/{report.gold}")
    return report


# ---- Predictions files ----------------------------------------------------------
def gold_predictions(docs: Iterable[TimeMLDocument]) -> dict[str, list[PredictedPair]]:
    """Gold links echoed as predictions."""
    return {
        d.doc_id: [(l.source, l.target, RelationSet.of(l.relation)) for l in d.tlinks]
        for d in docs
    }


def prediction_record(doc_id: str, pairs: Iterable[PredictedPair]) -> dict[str, Any]:
    return {
        "doc": doc_id,
        "relations": [{"source": s, "target": t, "set": r.names()} for s, t, r in pairs],
    }


def dump_predictions(predictions: Predictions, path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(prediction_record(d, predictions[d])) for d in predictions]
    p.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return p


def load_predictions(path: str | Path) -> dict[str, list[PredictedPair]]:
    """JSON lines: `{"doc": id, "relations": [{"source", "target", "set": [...]}]}`."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {p}: {e.strerror}", path=str(p)) from None
    out: dict[str, list[PredictedPair]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise InputError(f"{p}:{n}: not JSON ({e.msg})", path=str(p), line=n) from None
        rec = Record(data, source=f"{p.name}:{n}").require("doc").list_of("relations", dict).raise_for_errors()
        pairs: list[PredictedPair] = []
        for i, rel in enumerate(rec["relations"]):
            item = Record(rel, source=f"{p.name}:{n} relation {i}").require("source", "target").list_of("set", str)
            item.raise_for_errors()
            pairs.append((item["source"], item["target"], RelationSet.parse(item["set"])))
        out.setdefault(rec["doc"], []).extend(pairs)
    return out
