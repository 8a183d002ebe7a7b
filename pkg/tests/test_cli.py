import json
import os
from pathlib import Path

import pytest

from progressa.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def bundle_bytes(outdir: Path) -> dict:
    out = {}
    for p in sorted(outdir.iterdir()):
        if p.name == "manifest.json":
            doc = read_json(p)
            doc.pop("timestamp", None)
            out[p.name] = json.dumps(doc, sort_keys=True)
        else:
            out[p.name] = p.read_bytes()
    return out


def test_simulate_tree_edge_count(tmp_path):
    out = tmp_path / "sim"
    assert run_cli("simulate", "-o", out, "--topology", "tree", "--n", 15,
                   "--m", 250, "--nu", 0, "--seed", 3) == 0
    truth = read_json(out / "truth.json")
    assert len(truth["true_edges"]) == 14
    dataset = (out / "dataset.tsv").read_text().strip().splitlines()
    assert len(dataset) == 1 + 250


def test_simulate_disconnected_has_multiple_roots(tmp_path):
    out = tmp_path / "sim"
    assert run_cli("simulate", "-o", out, "--topology", "disconnected_dag",
                   "--n", 10, "--m", 50, "--seed", 4) == 0
    truth = read_json(out / "truth.json")
    roots = [e for e in truth["events"] if not truth["parents"][e]]
    assert len(roots) >= 2


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("simulate", "-o", out, "--n", 8, "--m", 60, "--seed", 9) == 0
    assert (a / "dataset.tsv").read_bytes() == (b / "dataset.tsv").read_bytes()
    assert (a / "truth.json").read_bytes() == (b / "truth.json").read_bytes()


def test_infer_bundle_and_determinism(tmp_path):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--n", 6, "--m", 200, "--seed", 21)
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        code = run_cli("infer", sim / "dataset.tsv", "-o", out, "--seed", 33,
                       "--confidence-iterations", 20, "--dump-scores")
        assert code == 0
        assert (out / "model.json").exists()
        assert (out / "model.dot").exists()
        assert (out / "scores.tsv").exists()
        assert (out / "manifest.json").exists()
        outs.append(bundle_bytes(out))
    assert outs[0] == outs[1]  # byte-identical modulo manifest timestamp
    model = read_json(tmp_path / "r1" / "model.json")
    assert model["kind"] == "progression_model"
    assert model["seed"] == 33
    dot = (tmp_path / "r1" / "model.dot").read_text()
    assert dot.startswith("digraph")


def test_infer_with_hypotheses(tmp_path):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--lethality", "--m", 200, "--seed", 41,
            "--n", 3)
    hyp = tmp_path / "patterns.txt"
    hyp.write_text("# exclusivity\na ^ b -> c\n")
    out = tmp_path / "out"
    assert run_cli("infer", sim / "dataset.tsv", "-o", out, "--seed", 43,
                   "--hypotheses", hyp, "--confidence-iterations", 0) == 0
    model = read_json(out / "model.json")
    assert model["hypotheses"] == ["(a ^ b) -> c"]
    clause_nodes = [n for n in model["nodes"] if n["kind"] == "clause"]
    assert clause_nodes and clause_nodes[0]["exclusivity"]


def test_infer_missing_input_gives_error_json(tmp_path, capsys):
    code = run_cli("infer", tmp_path / "nope.tsv", "-o", tmp_path / "out")
    assert code == 1
    doc = json.loads(capsys.readouterr().out.strip())
    assert doc["error"]["code"] == "io"


def test_infer_bad_cell_gives_error_json(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\n1\t2\n")
    code = run_cli("infer", bad, "-o", tmp_path / "out")
    assert code == 1
    doc = json.loads(capsys.readouterr().out.strip())
    assert doc["error"]["code"] == "matrix-parse"


def test_evaluate_truth_against_itself(tmp_path, capsys):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--n", 6, "--m", 80, "--seed", 51)
    truth = read_json(sim / "truth.json")
    # a model document whose edges are exactly the true ones
    model = {
        "schema_version": 1,
        "kind": "progression_model",
        "events": truth["events"],
        "nodes": [{"key": e, "kind": "event"} for e in truth["events"]],
        "edges": [{"parent": p, "child": c} for p, c in truth["true_edges"]],
    }
    inferred = tmp_path / "model.json"
    inferred.write_text(json.dumps(model))
    assert run_cli("evaluate", sim / "truth.json", inferred) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["hamming"] == 0
    assert doc["precision"] == 1.0 and doc["recall"] == 1.0


def test_evaluate_schema_mismatch(tmp_path, capsys):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--n", 5, "--m", 50, "--seed", 55)
    code = run_cli("evaluate", sim / "truth.json", sim / "truth.json")
    assert code == 1
    doc = json.loads(capsys.readouterr().out.strip())
    assert doc["error"]["code"] == "schema"


def test_benchmark_summary_rows(tmp_path):
    out = tmp_path / "bench"
    assert run_cli("benchmark", "-o", out, "--topologies", "tree,forest",
                   "--n", 6, "--models", 2, "--datasets", 1,
                   "--m-grid", "60,120", "--nu-grid", "0.0", "--seed", 61) == 0
    summary = (out / "summary.tsv").read_text().strip().splitlines()
    assert len(summary) == 1 + 2 * 2 * 1  # header + topologies x m x nu
    assert (out / "runs.tsv").exists()
    assert (out / "summary.json").exists()


def test_config_file_and_cli_precedence(tmp_path):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--n", 5, "--m", 100, "--seed", 71)
    conf = tmp_path / "conf.toml"
    conf.write_text('alpha = 0.2\nbootstrap_k = 50\n')
    out = tmp_path / "out"
    assert run_cli("infer", sim / "dataset.tsv", "-o", out, "--seed", 73,
                   "--config", conf, "--alpha", 0.01,
                   "--confidence-iterations", 0) == 0
    manifest = read_json(out / "manifest.json")
    assert manifest["config"]["alpha"] == 0.01  # CLI wins
    assert manifest["config"]["bootstrap_k"] == 50  # file beats default


def test_env_seed_fallback(tmp_path, monkeypatch):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--n", 5, "--m", 80, "--seed", 81)
    monkeypatch.setenv("PROGRESSA_SEED", "4242")
    out = tmp_path / "out"
    assert run_cli("infer", sim / "dataset.tsv", "-o", out,
                   "--confidence-iterations", 0) == 0
    assert read_json(out / "manifest.json")["seed"] == 4242


def test_expand_hypotheses_with_bare_pattern(tmp_path):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--lethality", "--m", 150, "--seed", 91, "--n", 3)
    hyp = tmp_path / "patterns.txt"
    hyp.write_text("a ^ b\n")  # no target: only legal with expansion
    out = tmp_path / "out"
    assert run_cli("infer", sim / "dataset.tsv", "-o", out, "--seed", 93,
                   "--hypotheses", hyp, "--expand-hypotheses",
                   "--confidence-iterations", 0) == 0
    model = read_json(out / "model.json")
    assert model["hypotheses"] == ["(a ^ b) -> c"]  # c is the only non-member event

    out2 = tmp_path / "out2"
    code = run_cli("infer", sim / "dataset.tsv", "-o", out2, "--seed", 93,
                   "--hypotheses", hyp, "--confidence-iterations", 0)
    assert code == 1  # bare pattern without the flag is an error


def test_fdr_flag_runs_and_is_recorded(tmp_path):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--n", 6, "--m", 150, "--seed", 95)
    out = tmp_path / "out"
    assert run_cli("infer", sim / "dataset.tsv", "-o", out, "--seed", 97,
                   "--fdr", "--confidence-iterations", 0) == 0
    assert read_json(out / "manifest.json")["config"]["fdr"] is True


def test_transpose_flag(tmp_path):
    sim = tmp_path / "sim"
    run_cli("simulate", "-o", sim, "--n", 5, "--m", 60, "--seed", 99)
    rows = (sim / "dataset.tsv").read_text().strip().splitlines()
    cells = [r.split("\t") for r in rows]
    flipped = "\n".join("\t".join(col) for col in zip(*cells)) + "\n"
    tfile = tmp_path / "transposed.tsv"
    tfile.write_text(flipped)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("infer", sim / "dataset.tsv", "-o", out_a, "--seed", 5,
                   "--confidence-iterations", 0) == 0
    assert run_cli("infer", tfile, "-o", out_b, "--seed", 5, "--transpose",
                   "--confidence-iterations", 0) == 0
    assert read_json(out_a / "model.json") == read_json(out_b / "model.json")
