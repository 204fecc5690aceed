"""Test the command-line surface end to end."""
import json
import pytest

from tempora.cli import main
from tempora.decoder import canonical
from tempora.lang import parse_sexpr


def _run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_algebra_compose(capsys):
    """Composition prints the resulting set."""
    assert _run(capsys, "algebra", "compose", "before", "before") == (0, "before\n", "")
    code, out, _ = _run(capsys, "algebra", "compose", "meets", "during")
    assert out.strip() == "during,overlaps,starts"


def test_algebra_table_verifies(capsys):
    """All 169 entries are printed and agree with the oracle."""
    code, out, err = _run(capsys, "algebra", "table", "--verify")
    assert code == 0
    assert len(out.splitlines()) == 169
    assert "before\tbefore\tbefore" in out.splitlines()
    assert "✅" in err


def test_net_solve(capsys, fixtures_dir, tmp_path):
    """A before B before C propagates to A before C."""
    code, out, _ = _run(capsys, "net", "solve", str(fixtures_dir / "network.json"))
    assert code == 0
    graph = json.loads(out)
    assert graph["status"] == "consistent"
    assert {"source": "A", "target": "C", "relations": ["before"]} in graph["edges"]

    dest = tmp_path / "graph.json"
    code, out, _ = _run(capsys, "net", "solve", str(fixtures_dir / "network.json"), "--out", str(dest))
    assert out.startswith("✅ consistent")
    assert json.loads(dest.read_text()) == graph


def test_net_solve_reports_conflict(capsys, tmp_path):
    """An inconsistent network is a result, not an error."""
    p = tmp_path / "cycle.json"
    p.write_text(json.dumps({
        "nodes": ["A", "B"],
        "constraints": [
            {"source": "A", "target": "B", "relations": "before"},
            {"source": "B", "target": "A", "relations": "before"},
        ],
    }))
    code, out, _ = _run(capsys, "net", "solve", str(p))
    assert code == 0
    graph = json.loads(out)
    assert graph["status"] == "inconsistent"
    assert graph["conflict"] == "constraint 1"


def test_lf_exec(capsys):
    """Executing a form prints its graph and denotation."""
    code, out, _ = _run(capsys, "lf", "exec", "(before ei1)", "--vocab", "ei1,ei2")
    assert code == 0
    data = json.loads(out)
    assert data["form"] == "(before ei1)"
    assert data["root"] == "ref#0"
    assert data["denotation"]["relations"]["ei1"] == ["before"]


def test_lf_exec_background(capsys):
    """Background constraints flow into the denotation."""
    code, out, _ = _run(capsys, "lf", "exec", "(before ei1)", "--vocab", "ei1,ei2", "--background", "ei1:ei2:before")
    assert json.loads(out)["denotation"]["relations"]["ei2"] == ["before"]
    code, _, err = _run(capsys, "lf", "exec", "ei1", "--vocab", "ei1", "--background", "ei1-before")
    assert code == 2
    assert json.loads(err)["error"] == "invalid_input"


def test_lf_actions(capsys):
    """One production per line."""
    code, out, _ = _run(capsys, "lf", "actions", "(before ei1)")
    assert out.splitlines() == [
        "START -> TimeInterval",
        "TimeInterval -> [Fn1, TimeInterval]",
        "Fn1 -> before",
        "TimeInterval -> ei1",
    ]


def test_dpd_search(capsys, fixtures_dir, tmp_path):
    """Matches one per line, then the stats line."""
    path = str(fixtures_dir / "dpd" / "intersection.json")
    code, out, _ = _run(capsys, "dpd", "search", path, "--max-actions", "9")
    assert code == 0
    lines = out.splitlines()
    assert str(canonical(parse_sexpr("(intersection (before ei1) (after ei2))"))) in lines
    assert lines[-1].startswith("# stats ")
    stats = json.loads(lines[-1][len("# stats "):])
    assert stats["enumerated"] >= len(lines) - 1
    assert "elapsed" not in stats

    dest = tmp_path / "forms.txt"
    _run(capsys, "dpd", "search", path, "--max-actions", "9", "--out", str(dest))
    assert dest.read_text() == out


def test_dpd_search_rejects_bad_gold(capsys, tmp_path):
    """Gold must be an object of label to relation."""
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"vocabulary": ["ei1"], "gold": ["before"]}))
    code, _, err = _run(capsys, "dpd", "search", str(p))
    assert code == 2
    assert json.loads(err)["error"] == "invalid_input"


@pytest.mark.parametrize("gold", [{"ei1": 3}, {"ei1": None}, {"ei1": ["before"]}])
def test_dpd_search_rejects_non_string_gold_relations(capsys, tmp_path, gold):
    """Each gold value names one relation."""
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"vocabulary": ["ei1"], "gold": gold}))
    code, out, err = _run(capsys, "dpd", "search", str(p))
    assert code == 2 and out == ""
    record = json.loads(err)
    assert record["error"] == "invalid_input"
    assert "ei1" in record["fields"]


def test_dpd_corpus(capsys, cue_dir, tmp_path):
    """One row per anchor with sentence-mate gold."""
    dest = tmp_path / "dpd" / "forms.jsonl"
    code, out, _ = _run(capsys, "dpd", "corpus", "--corpus", str(cue_dir), "--out", str(dest), "--max-actions", "6")
    assert code == 0
    rows = [json.loads(l) for l in dest.read_text().splitlines()]
    first = rows[0]
    assert (first["doc"], first["anchor"], first["gold"]) == ("cue1", "ei1", {"ei2": "after"})
    assert "(after ei2)" in first["forms"]
    assert (tmp_path / "dpd" / "timing.json").exists()


def test_corpus_ingest(capsys, timeml_dir, fixtures_dir, tmp_path):
    """Gold graphs plus a manifest matching the recorded one."""
    out_dir = tmp_path / "ingest"
    code, out, _ = _run(capsys, "corpus", "ingest", str(timeml_dir), "--out", str(out_dir))
    assert code == 0
    assert out.startswith("📦 4 documents")
    assert json.loads((out_dir / "manifest.json").read_text()) == json.loads((fixtures_dir / "manifest.json").read_text())
    gold = json.loads((out_dir / "gold" / "wsj_0004.json").read_text())
    assert gold["status"] == "inconsistent"


def test_corpus_ingest_split(capsys, timeml_dir, tmp_path):
    """A validation fraction marks documents per split."""
    out_dir = tmp_path / "ingest"
    _run(capsys, "corpus", "ingest", str(timeml_dir), "--out", str(out_dir), "--validation-fraction", "0.5", "--tag", "tb")
    m = json.loads((out_dir / "manifest.json").read_text())
    assert sorted(r["split"] for r in m["docs"]) == ["train", "train", "validation", "validation"]
    assert {r["corpus"] for r in m["docs"]} == {"tb"}


def test_decode(capsys, fixtures_dir):
    """Cued sentences decode to the cued relation; others to a constant."""
    code, out, _ = _run(capsys, "decode", str(fixtures_dir / "decode.json"), "--top-k", "3")
    assert code == 0
    results = json.loads(out)
    assert [r["sentence"] for r in results] == [0, 1]
    top = results[0]["forms"][0]
    assert (top["form"], top["score"]) == ("(before ei1)", 1.5)
    assert top["graph"]["root"] == "ref#0"
    assert results[1]["forms"][0]["form"] == "ei1"
    assert len(results[0]["forms"]) == 3


def test_decode_with_trigger_file(capsys, fixtures_dir, tmp_path):
    """A trigger file replaces the default table."""
    triggers = tmp_path / "t.json"
    triggers.write_text(json.dumps({"before": "after"}))
    code, out, _ = _run(capsys, "decode", str(fixtures_dir / "decode.json"), "--triggers", str(triggers))
    assert json.loads(out)[0]["forms"][0]["form"] == "(after ei1)"


def test_eval(capsys, timeml_dir, tmp_path):
    """Evaluating gold echoed back: full recall, and files written."""
    preds = tmp_path / "preds.jsonl"
    lines = []
    for doc in ("wsj_0001", "wsj_0002", "wsj_0003", "wsj_0004"):
        lines.append(json.dumps({"doc": doc, "relations": []}))
    lines[0] = json.dumps({"doc": "wsj_0001", "relations": [
        {"source": "ei1", "target": "ei2", "set": ["before"]},
        {"source": "ei2", "target": "ei3", "set": ["before"]},
    ]})
    preds.write_text("\n".join(lines) + "\n")
    out_dir = tmp_path / "eval"
    code, out, _ = _run(capsys, "eval", "--corpus", str(timeml_dir), "--predictions", str(preds), "--out", str(out_dir))
    assert code == 0
    assert out.startswith("tempora relation recall (strict)")
    report = json.loads((out_dir / "report.json").read_text())
    assert report["matched"] == 2
    assert report["config"] == {"match": "strict", "closure": False}
    assert (out_dir / "report.txt").read_text() == out
    assert (out_dir / "timing.json").exists()


def test_pipeline(capsys, cue_dir, tmp_path):
    """The pipeline prints its recall and writes predictions."""
    out_dir = tmp_path / "run"
    code, out, _ = _run(capsys, "pipeline", "--corpus", str(cue_dir), "--out", str(out_dir))
    assert code == 0
    assert "recall 0.750 (strict)" in out
    assert (out_dir / "predictions.jsonl").exists()


def test_pipeline_trigger_file(capsys, cue_dir, fixtures_dir, tmp_path):
    """Trigger files are validated and echoed in the report."""
    out_dir = tmp_path / "run"
    _run(capsys, "pipeline", "--corpus", str(cue_dir), "--out", str(out_dir), "--triggers", str(fixtures_dir / "triggers.json"))
    report = json.loads((out_dir / "report.json").read_text())
    assert report["config"]["triggers"]["until"] == "meets"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"soon": "later"}))
    code, _, err = _run(capsys, "pipeline", "--corpus", str(cue_dir), "--out", str(out_dir), "--triggers", str(bad))
    assert code == 2
    assert json.loads(err)["error"] == "unknown_relation"


def test_errors_are_json_records(capsys):
    """Library errors print a record to stderr and exit 2."""
    code, out, err = _run(capsys, "lf", "actions", "(before ei1")
    assert code == 2 and out == ""
    record = json.loads(err)
    assert record["error"] == "lf_syntax"
    assert record["position"] == 0
    code, _, err = _run(capsys, "net", "solve", "/nonexistent/network.json")
    assert code == 2
    assert json.loads(err)["error"] == "invalid_input"


@pytest.mark.parametrize("doc", [
    {"nodes": [{"label": 7}]},
    {"nodes": [{"label": "A", "kind": ["event"]}]},
    {"nodes": ["A", "B"], "constraints": [{"source": "A", "target": "B", "relations": 3}]},
    {"nodes": ["A", "B"], "constraints": [{"source": "A", "target": "B", "relations": ["before", 1]}]},
    {"nodes": ["A", "B"], "constraints": [{"source": ["A"], "target": "B", "relations": "before"}]},
])
def test_net_solve_rejects_mistyped_fields(capsys, tmp_path, doc):
    """Wrongly typed labels and relations are input errors."""
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, out, err = _run(capsys, "net", "solve", str(p))
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "invalid_input"


def test_eval_missing_predictions(capsys, timeml_dir, tmp_path):
    """An unreadable predictions file is an input error."""
    missing = tmp_path / "nope.jsonl"
    code, out, err = _run(capsys, "eval", "--corpus", str(timeml_dir), "--predictions", str(missing))
    assert code == 2 and out == ""
    record = json.loads(err)
    assert record["error"] == "invalid_input"
    assert record["path"] == str(missing)


def test_usage_errors_exit_2(capsys):
    """Bad flags print help and exit 2."""
    with pytest.raises(SystemExit) as exc:
        main(["algebra", "compose", "before"])
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_version(capsys):
    """--version names the package."""
    code, out, _ = _run(capsys, "--version")
    assert code == 0
    assert out.startswith("tempora ")
