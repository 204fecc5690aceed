# tempora/pipeline.py
"""Corpus run: decode one form per anchor event, execute it, collect pairs, evaluate.

Each event instance is an anchor once. Its vocabulary is the other mentions
of its sentence; the top-ranked decoded form is executed and the root's
relations to that vocabulary become predictions for (anchor, label). A pair
keeps the first singleton relation any anchor produced for it, otherwise the
first non-full one.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import config
from ._log import log
from .algebra import AllenRelation
from .decoder import DecodeContext, beam_search, constant_scorer, lexical_scorer
from .evaluate import EvalReport, PredictedPair, dump_predictions, evaluate
from .executor import ExecutionContext, compile_form
from .lang import Vocabulary
from .timeml import TimeMLDocument, load_corpus

SCORERS = ("lexical", "constant")


@dataclass(frozen=True)
class PipelineConfig:
    max_actions: int = config.MAX_ACTIONS
    beam: int = config.BEAM_WIDTH
    pruning: bool = True
    match: str = "strict"
    scorer: str = "lexical"
    closure: bool = False
    jobs: int = config.JOBS
    triggers: tuple[tuple[str, str], ...] | None = None  # word -> relation name

    def echo(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("jobs")  # parallelism does not change results
        out["triggers"] = dict(self.triggers) if self.triggers is not None else None
        return out


@dataclass
class DocResult:
    doc: str
    relations: list[PredictedPair] = field(default_factory=list)
    anchors: list[dict[str, Any]] = field(default_factory=list)
    error: str | None = None
    seconds: float = 0.0


def _trigger_table(cfg: PipelineConfig) -> dict[str, AllenRelation] | None:
    if cfg.triggers is None:
        return None
    return {w: AllenRelation.parse(r) for w, r in cfg.triggers}


def decode_document(doc: TimeMLDocument, cfg: PipelineConfig) -> DocResult:
    t0 = time.perf_counter()
    out = DocResult(doc.doc_id)
    try:
        chosen: dict[frozenset[str], PredictedPair] = {}
        order: list[frozenset[str]] = []
        triggers = _trigger_table(cfg)
        for inst in doc.instances:
            m = doc.mention(inst.eiid)
            if m is None:
                continue
            mates = [x for x in doc.sentence_mentions(m.sentence) if x.label != inst.eiid]
            if not mates:
                continue
            sentence = doc.sentences[m.sentence]
            tokens = tuple(t.text for t in sentence.tokens)
            vocab = Vocabulary(tuple((x.label, x.kind) for x in mates))
            ctx = DecodeContext(tokens, vocab, {x.label: x.token for x in mates}, m.token)
            scorer = lexical_scorer(tokens, triggers) if cfg.scorer == "lexical" else constant_scorer()
            ranked = beam_search(ctx, scorer, cfg.beam, cfg.max_actions, pruning=cfg.pruning)
            if not ranked:
                continue
            best = ranked[0]
            ex = compile_form(best.form, ExecutionContext(vocab))
            d = ex.denotation()
            out.anchors.append({"anchor": inst.eiid, **best.to_dict(), "graph": ex.to_graph()})
            if not d.consistent:
                continue
            for label in vocab.labels:
                r = d.relations[label]
                if r.is_full:
                    continue
                key = frozenset((inst.eiid, label))
                prev = chosen.get(key)
                if prev is None:
                    order.append(key)
                    chosen[key] = (inst.eiid, label, r)
                elif r.is_singleton and not prev[2].is_singleton:
                    chosen[key] = (inst.eiid, label, r)
        out.relations = sorted((chosen[k] for k in order), key=lambda p: (p[0], p[1]))
    except Exception as e:  # isolate per-document failures
        out.error = f"{type(e).__name__}: {e}"
        log(f"pipeline: {doc.doc_id} failed:", out.error)
    out.seconds = time.perf_counter() - t0
    return out


def _decode_star(args: tuple[TimeMLDocument, PipelineConfig]) -> DocResult:
    return decode_document(*args)


def decode_corpus(docs: list[TimeMLDocument], cfg: PipelineConfig) -> list[DocResult]:
    """Results in corpus order whatever the number of jobs."""
    if cfg.jobs > 1 and len(docs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_decode_star, [(d, cfg) for d in docs]))
    return [decode_document(d, cfg) for d in docs]


@dataclass
class PipelineRun:
    results: list[DocResult]
    report: EvalReport
    seconds: float

    @property
    def predictions(self) -> dict[str, list[PredictedPair]]:
        return {r.doc: r.relations for r in self.results}


def run_pipeline(
    corpus: str | Path,
    out_dir: str | Path | None,
    cfg: PipelineConfig,
    *,
    pattern: str = "*.tml",
) -> PipelineRun:
    t0 = time.perf_counter()
    docs = load_corpus(corpus, pattern)
    results = decode_corpus(docs, cfg)
    preds = {r.doc: r.relations for r in results}
    report = evaluate(docs, preds, mode=cfg.match, closure=cfg.closure)
    for r in results:
        if r.error:
            report.warnings.append(f"{r.doc}: {r.error}")
    run = PipelineRun(results, report, time.perf_counter() - t0)
    if out_dir is not None:
        write_outputs(run, Path(out_dir), cfg)
    return run


def _json(data: Any) -> str:
    return json.dumps(data, indent=2) + "\n"


def write_outputs(run: PipelineRun, out: Path, cfg: PipelineConfig):
    out.mkdir(parents=True, exist_ok=True)
    dump_predictions(run.predictions, out / "predictions.jsonl")
    graphs = out / "graphs"
    graphs.mkdir(exist_ok=True)
    for r in run.results:
        (graphs / f"{r.doc}.json").write_text(
            _json({"doc": r.doc, "error": r.error, "anchors": r.anchors}), encoding="utf-8"
        )
    (out / "report.json").write_text(_json(run.report.to_dict(cfg.echo())), encoding="utf-8")
    (out / "report.txt").write_text(run.report.to_text(), encoding="utf-8")
    write_timing(out, run.seconds, {r.doc: r.seconds for r in run.results})


def write_timing(out: Path, total: float, per_document: Mapping[str, float] | None = None):
    timing = {"total_seconds": round(total, 6)}
    if per_document:
        timing["documents"] = {d: round(s, 6) for d, s in per_document.items()}
    (out / "timing.json").write_text(_json(timing), encoding="utf-8")
