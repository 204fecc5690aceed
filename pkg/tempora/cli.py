# tempora/cli.py
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__, config
from ._log import log
from .algebra import RELATIONS, RelationSet, compose, compose_oracle
from .decoder import DecodeContext, beam_search, constant_scorer, lexical_scorer, parse_triggers
from .dpd import GoldDenotation, SearchConfig, search
from .errors import InputError, TemporaError
from .evaluate import MODES, evaluate, load_predictions
from .executor import ExecutionContext, compile_form
from .lang import Vocabulary, format_actions, parse_sexpr, to_actions
from .network import ConstraintNetwork, NodeKind, Status
from .pipeline import SCORERS, PipelineConfig, run_pipeline, write_timing
from .records import Record
from .timeml import gold_denotation, gold_network, load_corpus, manifest, split_corpus


class _Parser(argparse.ArgumentParser):
    """Usage errors print the full flag documentation."""
    def error(self, message: str):
        self.print_help(sys.stderr)
        self.exit(2, f"\n{self.prog}: error: {message}\n")


def _read_json(path: str) -> Any:
    p = Path(path)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"cannot read {p}: {e.strerror}", path=str(p)) from None
    except json.JSONDecodeError as e:
        raise InputError(f"{p}: not JSON ({e.msg} at line {e.lineno})", path=str(p)) from None


def _dump(data: Any) -> str:
    return json.dumps(data, indent=2)


def _on_off(v: str) -> bool:
    return v == "on"


def _vocabulary(items: Sequence[Any], source: str) -> Vocabulary:
    """Labels (kind inferred from the `t*` convention) or `{"label", "kind"}` objects."""
    entries: list[tuple[str, NodeKind]] = []
    for i, item in enumerate(items):
        if isinstance(item, str):
            entries.append((item, NodeKind.TIMEX if item.startswith("t") else NodeKind.EVENT))
            continue
        rec = Record(item, source=f"{source} vocabulary item {i}").require("label").typed("label", str)
        rec.one_of("kind", [NodeKind.EVENT.value, NodeKind.TIMEX.value]).raise_for_errors()
        entries.append((rec["label"], NodeKind(rec["kind"] or NodeKind.EVENT.value)))
    return Vocabulary(tuple(entries))


def _constraints(items: Sequence[Any], source: str) -> list[tuple[str, str, RelationSet]]:
    out = []
    for i, item in enumerate(items):
        rec = Record(item, source=f"{source} constraint {i}").require("source", "target", "relations")
        rec.typed("source", str).typed("target", str).typed("relations", (str, list))
        if isinstance(rec["relations"], list):
            rec.list_of("relations", str)
        rec.raise_for_errors()
        out.append((rec["source"], rec["target"], RelationSet.parse(rec["relations"])))
    return out


def _background_flag(specs: Sequence[str] | None) -> list[tuple[str, str, RelationSet]]:
    out = []
    for text in specs or []:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"background constraint must be SOURCE:TARGET:RELATIONS, got {text!r}", value=text)
        out.append((parts[0], parts[1], RelationSet.parse(parts[2])))
    return out


# ---------- ALGEBRA -------------------------------------------------------------

def cmd_algebra_compose(r1: str, r2: str) -> int:
    print(compose(RelationSet.parse(r1), RelationSet.parse(r2)) or "empty")
    return 0


def cmd_algebra_table(verify: bool = False) -> int:
    bad = 0
    for a in RELATIONS:
        for b in RELATIONS:
            got = compose(RelationSet.of(a), RelationSet.of(b))
            print(f"{a}\t{b}\t{got}")
            if verify and got != compose_oracle(a, b):
                bad += 1
                print(f"❌ mismatch: {a} ∘ {b}: table {got}, oracle {compose_oracle(a, b)}", file=sys.stderr)
    if verify:
        if bad:
            print(f"❌ {bad} of {len(RELATIONS) ** 2} entries differ from the endpoint oracle", file=sys.stderr)
            return 1
        print(f"✅ all {len(RELATIONS) ** 2} entries match the endpoint oracle", file=sys.stderr)
    return 0


# ---------- NETWORK -------------------------------------------------------------

def cmd_net_solve(path: str, out: str | None = None) -> int:
    rec = Record(_read_json(path), source=Path(path).name)
    rec.list_of("nodes", (str, dict)).list_of("constraints", dict, optional=True).raise_for_errors()
    net = ConstraintNetwork()
    for label, kind in _vocabulary(rec["nodes"], Path(path).name).entries:
        net.add_node(kind, label)
    for n, (a, b, r) in enumerate(_constraints(rec["constraints"] or [], Path(path).name)):
        net.assert_labels(a, b, r, tag=f"constraint {n}")
    net.propagate()
    text = _dump(net.to_graph())
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        print(f"✅ {net.status.value} network written: {out}")
    else:
        print(text)
    return 0


# ---------- LOGICAL FORMS -------------------------------------------------------

def cmd_lf_exec(sexpr: str, vocab: str, background: Sequence[str] | None = None) -> int:
    lf = parse_sexpr(sexpr)
    ctx = ExecutionContext(Vocabulary.infer(v for v in vocab.split(",") if v), tuple(_background_flag(background)))
    ex = compile_form(lf, ctx)
    print(_dump({"form": str(lf), **ex.to_graph(), "denotation": ex.denotation().to_dict()}))
    return 0


def cmd_lf_actions(sexpr: str) -> int:
    for line in format_actions(to_actions(parse_sexpr(sexpr))):
        print(line)
    return 0


# ---------- DPD -----------------------------------------------------------------

def _search_config(max_actions: int, pruning: bool, match: str, max_results: int | None) -> SearchConfig:
    return SearchConfig(max_actions=max_actions, pruning=pruning, max_results=max_results, lax=match == "lax")


def cmd_dpd_search(path: str, cfg: SearchConfig, out: str | None = None) -> int:
    source = Path(path).name
    rec = Record(_read_json(path), source=source)
    rec.list_of("vocabulary", (str, dict)).list_of("background", dict, optional=True).require("gold")
    rec.raise_for_errors()
    gold = Record(rec["gold"], source=f"{source} gold")
    for label in gold.data:
        gold.require(label).typed(label, str)
    gold.raise_for_errors()
    vocab = _vocabulary(rec["vocabulary"], source)
    ctx = ExecutionContext(vocab, tuple(_constraints(rec["background"] or [], source)))
    result = search(vocab, ctx, GoldDenotation.of(gold.data), cfg)
    lines = [str(lf) for lf in result.matches]
    lines.append("# stats " + json.dumps(result.stats.to_dict(timing=False), sort_keys=True))
    text = "\n".join(lines) + "\n"
    log(f"dpd search took {result.stats.elapsed:.3f}s")
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(f"✅ {len(result.matches)} matching forms written: {out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_dpd_corpus(corpus: str, out: str, cfg: SearchConfig, pattern: str = "*.tml") -> int:
    """Weak-supervision set: matching forms per anchor, over its sentence mates."""
    t0 = time.perf_counter()
    docs = load_corpus(corpus, pattern)
    rows: list[dict[str, Any]] = []
    skipped = 0
    for doc in docs:
        net = gold_network(doc)
        if net.status is not Status.CONSISTENT:
            skipped += 1
            continue
        for inst in doc.instances:
            m = doc.mention(inst.eiid)
            if m is None:
                continue
            mates = [x for x in doc.sentence_mentions(m.sentence) if x.label != inst.eiid]
            if not mates:
                continue
            vocab = Vocabulary(tuple((x.label, x.kind) for x in mates))
            full = gold_denotation(doc, inst.eiid, network=net)
            gold = GoldDenotation({k: v for k, v in full.relations.items() if k in vocab})
            if not len(gold):
                continue
            result = search(vocab, ExecutionContext(vocab), gold, cfg)
            rows.append({
                "doc": doc.doc_id,
                "anchor": inst.eiid,
                "gold": gold.to_dict(),
                "forms": [str(lf) for lf in result.matches],
                "stats": result.stats.to_dict(timing=False),
            })
    dest = Path(out)
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    write_timing(dest.parent, time.perf_counter() - t0)
    print(f"✅ {len(rows)} anchors searched, {skipped} inconsistent documents skipped: {dest}")
    return 0


# ---------- CORPUS --------------------------------------------------------------

def cmd_corpus_ingest(
    path: str,
    out: str,
    *,
    pattern: str = "*.tml",
    tag: str | None = None,
    validation_fraction: float = 0.0,
    seed: int = 0,
) -> int:
    docs = load_corpus(path, pattern, corpus=tag)
    split = split_corpus([d.doc_id for d in docs], validation_fraction, seed) if validation_fraction else None
    dest = Path(out)
    gold_dir = dest / "gold"
    gold_dir.mkdir(parents=True, exist_ok=True)
    for d in docs:
        (gold_dir / f"{d.doc_id}.json").write_text(_dump({"doc": d.doc_id, **gold_network(d).to_graph()}) + "\n", encoding="utf-8")
    m = manifest(docs, split=split)
    (dest / "manifest.json").write_text(_dump(m) + "\n", encoding="utf-8")
    print(
        f"📦 {m['documents']} documents, {m['tlinks']} links, "
        f"{m['warnings']} warnings, {m['inconsistent']} inconsistent: {dest / 'manifest.json'}"
    )
    return 0


# ---------- DECODE --------------------------------------------------------------

def cmd_decode(
    path: str,
    *,
    beam: int,
    max_actions: int,
    top_k: int,
    pruning: bool,
    scorer: str,
    triggers_path: str | None = None,
) -> int:
    data = _read_json(path)
    records = data if isinstance(data, list) else [data]
    default_triggers = parse_triggers(_read_json(triggers_path)) if triggers_path else None
    results = []
    for n, item in enumerate(records):
        source = f"{Path(path).name} sentence {n}"
        rec = Record(item, source=source).list_of("tokens", str).list_of("vocabulary", (str, dict))
        rec.raise_for_errors()
        vocab = _vocabulary(rec["vocabulary"], source)
        tokens = tuple(rec["tokens"])
        triggers = parse_triggers(rec["triggers"]) if isinstance(rec["triggers"], dict) else default_triggers
        ctx = DecodeContext(tokens, vocab, dict(rec["positions"] or {}), rec["anchor_position"])
        s = lexical_scorer(tokens, triggers) if scorer == "lexical" else constant_scorer()
        ranked = beam_search(ctx, s, beam, max_actions, pruning=pruning)[:top_k]
        exec_ctx = ExecutionContext(vocab)
        results.append({
            "sentence": n,
            "forms": [{**f.to_dict(), "graph": compile_form(f.form, exec_ctx).to_graph()} for f in ranked],
        })
        if not ranked:
            log(f"decode: sentence {n} has no completion")
    print(_dump(results))
    return 0


# ---------- EVAL / PIPELINE -----------------------------------------------------

def cmd_eval(
    corpus: str,
    predictions: str,
    *,
    match: str = "strict",
    closure: bool = False,
    out: str | None = None,
    pattern: str = "*.tml",
) -> int:
    t0 = time.perf_counter()
    docs = load_corpus(corpus, pattern)
    report = evaluate(docs, load_predictions(predictions), mode=match, closure=closure)
    text = report.to_text()
    if out:
        dest = Path(out)
        dest.mkdir(parents=True, exist_ok=True)
        echo = {"match": match, "closure": closure}
        (dest / "report.json").write_text(_dump(report.to_dict(echo)) + "\n", encoding="utf-8")
        (dest / "report.txt").write_text(text, encoding="utf-8")
        write_timing(dest, time.perf_counter() - t0)
    sys.stdout.write(text)
    return 0


def cmd_pipeline(corpus: str, out: str, cfg: PipelineConfig, pattern: str = "*.tml") -> int:
    run = run_pipeline(corpus, out, cfg, pattern=pattern)
    recall = run.report.recall
    print(f"✅ {len(run.results)} documents, recall {'n/a' if recall is None else f'{recall:.3f}'} ({cfg.match}): {out}")
    return 0


def cmd_version() -> int:
    """Print the current tempora version."""
    import importlib.metadata
    try:
        print(f"tempora {importlib.metadata.version('tempora')}")
    except importlib.metadata.PackageNotFoundError:
        print(f"tempora {__version__} (development version)")
    return 0


# ---------- MAIN --------------------------------------------------------------

def _add_search_flags(p: argparse.ArgumentParser):
    p.add_argument("--max-actions", type=int, default=config.MAX_ACTIONS, help="Action-sequence bound (default %(default)s)")
    p.add_argument("--pruning", choices=["on", "off"], default="on")
    p.add_argument("--match", choices=MODES, default="strict")
    p.add_argument("--max-results", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tempora", description="Temporal reasoning over Allen's interval algebra")
    p.add_argument("--version", action="store_true", help="Show version and exit")
    sub = p.add_subparsers(dest="cmd", required=False)

    p_alg = sub.add_parser("algebra", help="Relation algebra")
    alg_sub = p_alg.add_subparsers(dest="alg_cmd", required=True)
    p_comp = alg_sub.add_parser("compose", help="Compose two relation sets, e.g. 'before' 'meets,overlaps'")
    p_comp.add_argument("r1")
    p_comp.add_argument("r2")
    p_tab = alg_sub.add_parser("table", help="Print the 13x13 composition table")
    p_tab.add_argument("--verify", action="store_true", help="Check every entry against the endpoint oracle")

    p_net = sub.add_parser("net", help="Constraint networks")
    net_sub = p_net.add_subparsers(dest="net_cmd", required=True)
    p_solve = net_sub.add_parser("solve", help="Propagate a network file and print the relation graph")
    p_solve.add_argument("path", help="JSON: {nodes: [...], constraints: [{source, target, relations}]}")
    p_solve.add_argument("--out")

    p_lf = sub.add_parser("lf", help="Logical forms")
    lf_sub = p_lf.add_subparsers(dest="lf_cmd", required=True)
    p_exec = lf_sub.add_parser("exec", help="Execute a logical form")
    p_exec.add_argument("sexpr")
    p_exec.add_argument("--vocab", required=True, help="Comma-separated context constants")
    p_exec.add_argument("--background", action="append", metavar="SRC:TGT:RELS", help="Known constraint (repeatable)")
    p_act = lf_sub.add_parser("actions", help="Print the action sequence of a logical form")
    p_act.add_argument("sexpr")

    p_dpd = sub.add_parser("dpd", help="Search for forms matching a gold denotation")
    dpd_sub = p_dpd.add_subparsers(dest="dpd_cmd", required=True)
    p_search = dpd_sub.add_parser("search", help="Search one context + gold file")
    p_search.add_argument("path", help="JSON: {vocabulary: [...], gold: {label: relation}, background?: [...]}")
    p_search.add_argument("--out")
    _add_search_flags(p_search)
    p_dcorp = dpd_sub.add_parser("corpus", help="Search every anchor of a corpus (JSON lines out)")
    p_dcorp.add_argument("--corpus", required=True)
    p_dcorp.add_argument("--out", required=True)
    p_dcorp.add_argument("--pattern", default="*.tml")
    _add_search_flags(p_dcorp)

    p_corpus = sub.add_parser("corpus", help="TimeML corpora")
    corpus_sub = p_corpus.add_subparsers(dest="corpus_cmd", required=True)
    p_ingest = corpus_sub.add_parser("ingest", help="Parse a corpus; write gold graphs and a manifest")
    p_ingest.add_argument("path")
    p_ingest.add_argument("--out", required=True)
    p_ingest.add_argument("--pattern", default="*.tml")
    p_ingest.add_argument("--tag", default=None, help="Corpus tag recorded per document")
    p_ingest.add_argument("--validation-fraction", type=float, default=0.0)
    p_ingest.add_argument("--seed", type=int, default=0)

    p_dec = sub.add_parser("decode", help="Beam-decode sentence records")
    p_dec.add_argument("path", help="JSON record or list: {tokens, vocabulary, positions?, anchor_position?, triggers?}")
    p_dec.add_argument("--beam", type=int, default=config.BEAM_WIDTH)
    p_dec.add_argument("--max-actions", type=int, default=config.MAX_ACTIONS)
    p_dec.add_argument("--top-k", type=int, default=config.TOP_K)
    p_dec.add_argument("--pruning", choices=["on", "off"], default="on")
    p_dec.add_argument("--scorer", choices=SCORERS, default="lexical")
    p_dec.add_argument("--triggers", help="JSON trigger table {word: relation}")

    p_eval = sub.add_parser("eval", help="Relation recall of predictions against gold TLINKs")
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--match", choices=MODES, default="strict")
    p_eval.add_argument("--closure", action="store_true", help="Score against all singleton pairs of consistent gold")
    p_eval.add_argument("--out")
    p_eval.add_argument("--pattern", default="*.tml")

    p_pipe = sub.add_parser("pipeline", help="Decode, execute and evaluate a whole corpus")
    p_pipe.add_argument("--corpus", required=True)
    p_pipe.add_argument("--out", required=True)
    p_pipe.add_argument("--max-actions", type=int, default=config.MAX_ACTIONS)
    p_pipe.add_argument("--beam", type=int, default=config.BEAM_WIDTH)
    p_pipe.add_argument("--pruning", choices=["on", "off"], default="on")
    p_pipe.add_argument("--match", choices=MODES, default="strict")
    p_pipe.add_argument("--jobs", type=int, default=config.JOBS)
    p_pipe.add_argument("--triggers", help="JSON trigger table {word: relation}")
    p_pipe.add_argument("--scorer", choices=SCORERS, default="lexical")
    p_pipe.add_argument("--closure", action="store_true")
    p_pipe.add_argument("--pattern", default="*.tml")
    return p


def _dispatch(p: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    if args.version:
        return cmd_version()

    if args.cmd == "algebra" and args.alg_cmd == "compose":
        return cmd_algebra_compose(args.r1, args.r2)
    if args.cmd == "algebra" and args.alg_cmd == "table":
        return cmd_algebra_table(args.verify)
    if args.cmd == "net" and args.net_cmd == "solve":
        return cmd_net_solve(args.path, args.out)
    if args.cmd == "lf" and args.lf_cmd == "exec":
        return cmd_lf_exec(args.sexpr, args.vocab, args.background)
    if args.cmd == "lf" and args.lf_cmd == "actions":
        return cmd_lf_actions(args.sexpr)
    if args.cmd == "dpd":
        cfg = _search_config(args.max_actions, _on_off(args.pruning), args.match, args.max_results)
        if args.dpd_cmd == "search":
            return cmd_dpd_search(args.path, cfg, args.out)
        return cmd_dpd_corpus(args.corpus, args.out, cfg, args.pattern)
    if args.cmd == "corpus" and args.corpus_cmd == "ingest":
        return cmd_corpus_ingest(
            args.path, args.out, pattern=args.pattern, tag=args.tag,
            validation_fraction=args.validation_fraction, seed=args.seed,
        )
    if args.cmd == "decode":
        return cmd_decode(
            args.path, beam=args.beam, max_actions=args.max_actions, top_k=args.top_k,
            pruning=_on_off(args.pruning), scorer=args.scorer, triggers_path=args.triggers,
        )
    if args.cmd == "eval":
        return cmd_eval(
            args.corpus, args.predictions, match=args.match, closure=args.closure,
            out=args.out, pattern=args.pattern,
        )
    if args.cmd == "pipeline":
        triggers = None
        if args.triggers:
            table = _read_json(args.triggers)
            parse_triggers(table)  # validate names up front
            triggers = tuple(sorted((w.lower(), r) for w, r in table.items()))
        cfg = PipelineConfig(
            max_actions=args.max_actions, beam=args.beam, pruning=_on_off(args.pruning),
            match=args.match, scorer=args.scorer, closure=args.closure, jobs=args.jobs,
            triggers=triggers,
        )
        return cmd_pipeline(args.corpus, args.out, cfg, args.pattern)

    p.print_help()
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    p = build_parser()
    args = p.parse_args(argv)
    try:
        return _dispatch(p, args)
    except TemporaError as e:
        print(json.dumps(e.to_record()), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
