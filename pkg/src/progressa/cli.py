"""Command-line interface: infer, simulate, evaluate, benchmark.

Configuration precedence is CLI flags over a TOML config file over built-in
defaults. All randomness flows from one seed (flag, else PROGRESSA_SEED, else
drawn once and recorded); every output directory gets a manifest sufficient
to replay the run exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .confidence import edge_confidence
from .errors import CatalogMismatchError, ParameterError, ProgressaError
from .evaluation import ExperimentGrid, compare_edge_sets, run_grid
from .formulas import expand_hypotheses, parse_hypothesis_file
from .generator import (
    NoiseSpec,
    generate_lethality_model,
    generate_model,
    load_model,
    sample_dataset,
)
from .inference import InferenceConfig, infer_progression
from .matrix import load_matrix, save_matrix
from .report import dump_json, load_inferred_edges, result_to_json, scores_tsv, to_dot

DEFAULTS = {
    "alpha": 0.05,
    "bootstrap_k": 100,
    "confidence_iterations": 1000,
    "confidence_mode": "nonparametric",
    "parent_cap": 10,
    "algorithm": "full",
    "jobs": 1,
}


def _load_toml(path) -> dict:
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ParameterError(f"invalid config file {path}: {exc}") from exc


def _merge_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """CLI flag > TOML file entry > default."""
    file_conf = _load_toml(args.config) if getattr(args, "config", None) else {}
    merged = {}
    for key in keys:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            merged[key] = cli_val
        elif key in file_conf:
            merged[key] = file_conf[key]
        elif key in DEFAULTS:
            merged[key] = DEFAULTS[key]
        else:
            merged[key] = None
    return merged


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("PROGRESSA_SEED")
    if env:
        return int(env)
    return int.from_bytes(os.urandom(6), "big")


def _write_manifest(outdir: Path, command: str, config: dict, seed: int) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "versions": {
            "progressa": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    dump_json(manifest, outdir / "manifest.json")


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_infer(args) -> int:
    conf = _merge_config(
        args,
        ["alpha", "bootstrap_k", "confidence_iterations", "confidence_mode",
         "parent_cap", "algorithm"],
    )
    seed = _resolve_seed(args)
    outdir = _outdir(args)

    matrix = load_matrix(args.input, transpose=bool(args.transpose))
    hypotheses: tuple = ()
    if args.hypotheses:
        parsed = parse_hypothesis_file(
            args.hypotheses,
            expand_events=matrix.events if args.expand_hypotheses else None,
        )
        if args.expand_hypotheses:
            parsed = expand_hypotheses(parsed, matrix.events)
        hypotheses = tuple(parsed)

    config = InferenceConfig(
        alpha=float(conf["alpha"]),
        bootstrap_k=int(conf["bootstrap_k"]),
        parent_cap=int(conf["parent_cap"]),
        fdr=bool(args.fdr),
        algorithm=conf["algorithm"],
        force=bool(args.force),
    )
    result = infer_progression(matrix, hypotheses, config=config, seed=seed)

    confidence = None
    iterations = int(conf["confidence_iterations"])
    if iterations > 0 and conf["confidence_mode"] != "none":
        work = matrix if config.force else matrix.drop_columns(matrix.invalid_columns())
        confidence = edge_confidence(
            work,
            result.hypotheses,
            result,
            iterations=iterations,
            mode=conf["confidence_mode"],
            seed=seed,
            config=config,
        )

    dump_json(result_to_json(result, confidence), outdir / "model.json")
    (outdir / "model.dot").write_text(to_dot(result, confidence), encoding="utf-8")
    if args.dump_scores:
        (outdir / "scores.tsv").write_text(scores_tsv(result), encoding="utf-8")
    run_conf = dict(conf)
    run_conf.update(
        input=str(args.input), hypotheses=str(args.hypotheses or ""),
        transpose=bool(args.transpose), force=bool(args.force),
        fdr=bool(args.fdr), expand_hypotheses=bool(args.expand_hypotheses),
    )
    _write_manifest(outdir, "infer", run_conf, seed)
    return 0


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    outdir = _outdir(args)
    nu = float(args.nu)

    if args.lethality:
        model = generate_lethality_model(p_preferential=float(args.p_preferential), seed=seed)
    else:
        model = generate_model(
            n=int(args.n),
            topology=args.topology,
            w_star=int(args.w_star),
            p_min=float(args.p_min),
            p_max=float(args.p_max),
            seed=seed,
            pattern_semantics=args.semantics,
        )
    data = sample_dataset(model, int(args.m), NoiseSpec(nu), seed=seed)
    save_matrix(data, outdir / "dataset.tsv")
    model.save(outdir / "truth.json")
    run_conf = {
        "topology": args.topology, "n": int(args.n), "m": int(args.m), "nu": nu,
        "w_star": int(args.w_star), "semantics": args.semantics,
        "lethality": bool(args.lethality), "p_preferential": float(args.p_preferential),
        "p_min": float(args.p_min), "p_max": float(args.p_max),
    }
    _write_manifest(outdir, "simulate", run_conf, seed)
    return 0


def cmd_evaluate(args) -> int:
    truth = load_model(args.truth)
    catalog, inferred_edges = load_inferred_edges(args.inferred)
    if set(catalog) != set(truth.events):
        raise CatalogMismatchError("truth and inferred files cover different catalogs")
    score = compare_edge_sets(truth.true_edges(), inferred_edges)
    doc = score.to_dict()
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.output:
        outdir = _outdir(args)
        dump_json(doc, outdir / "score.json")
    return 0


def cmd_benchmark(args) -> int:
    conf = _merge_config(args, ["alpha", "bootstrap_k", "parent_cap", "algorithm", "jobs"])
    seed = _resolve_seed(args)
    outdir = _outdir(args)

    scale = float(args.scale)
    models = args.models if args.models is not None else max(1, round(100 * scale))
    datasets = args.datasets if args.datasets is not None else max(1, round(10 * scale))
    grid_kwargs = {}
    if args.p_min is not None:
        grid_kwargs["p_min"] = float(args.p_min)
    if args.p_max is not None:
        grid_kwargs["p_max"] = float(args.p_max)
    grid = ExperimentGrid(
        topologies=tuple(args.topologies.split(",")),
        n_events=int(args.n),
        w_star=int(args.w_star),
        models_per_topology=int(models),
        datasets_per_model=int(datasets),
        m_values=tuple(int(v) for v in args.m_grid.split(",")),
        nu_values=tuple(float(v) for v in args.nu_grid.split(",")),
        pattern_semantics=args.semantics,
        **grid_kwargs,
    )
    config = InferenceConfig(
        alpha=float(conf["alpha"]),
        bootstrap_k=int(conf["bootstrap_k"]),
        parent_cap=int(conf["parent_cap"]),
        algorithm=conf["algorithm"],
    )
    result = run_grid(grid, config=config, seed=seed, jobs=int(conf["jobs"]))
    result.write_tsv(outdir / "runs.tsv")
    result.write_summary_tsv(outdir / "summary.tsv")
    result.write_summary_json(outdir / "summary.json")
    if args.plot:
        result.write_svg_plot(outdir / "hd_vs_m.svg", x_axis="m")
        result.write_svg_plot(outdir / "hd_vs_nu.svg", x_axis="nu")
    run_conf = dict(conf)
    run_conf.update(
        topologies=args.topologies, n=int(args.n), w_star=int(args.w_star),
        models=int(models), datasets=int(datasets), m_grid=args.m_grid,
        nu_grid=args.nu_grid, semantics=args.semantics, scale=scale,
    )
    _write_manifest(outdir, "benchmark", run_conf, seed)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="progressa",
        description="Progression model inference from cross-sectional binary alteration data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="root RNG seed (env PROGRESSA_SEED as fallback)")
        p.add_argument("--config", default=None, help="TOML config file (CLI flags take precedence)")

    p_infer = sub.add_parser("infer", help="reconstruct a progression model from a dataset")
    p_infer.add_argument("input", help="dataset TSV/CSV (header = event names, rows = samples)")
    p_infer.add_argument("-o", "--output", required=True, help="output directory")
    p_infer.add_argument("--hypotheses", default=None, help="pattern file, one hypothesis per line")
    p_infer.add_argument("--expand-hypotheses", action="store_true",
                         help="test each pattern against every event not occurring in it")
    p_infer.add_argument("--transpose", action="store_true", help="input has events as rows")
    p_infer.add_argument("--force", action="store_true", help="keep degenerate/duplicate columns")
    p_infer.add_argument("--alpha", type=float, default=None, help="significance level (default 0.05)")
    p_infer.add_argument("--bootstrap-k", dest="bootstrap_k", type=int, default=None,
                         help="retained resamples per distribution (default 100)")
    p_infer.add_argument("--confidence-iterations", dest="confidence_iterations", type=int, default=None,
                         help="bootstrap replicates for edge confidence (default 1000, 0 disables)")
    p_infer.add_argument("--confidence-mode", dest="confidence_mode", default=None,
                         choices=["nonparametric", "parametric", "none"])
    p_infer.add_argument("--parent-cap", dest="parent_cap", type=int, default=None)
    p_infer.add_argument("--algorithm", default=None, choices=["full", "prima-facie"])
    p_infer.add_argument("--dump-scores", action="store_true", help="write all pair scores as TSV")
    p_infer.add_argument("--fdr", action="store_true", help="Benjamini-Hochberg adjust the test p-values")
    common(p_infer)
    p_infer.set_defaults(func=cmd_infer)

    p_sim = sub.add_parser("simulate", help="generate a ground-truth model and sample a dataset")
    p_sim.add_argument("-o", "--output", required=True)
    p_sim.add_argument("--topology", default="tree",
                       choices=["tree", "forest", "connected_dag", "disconnected_dag"])
    p_sim.add_argument("--n", type=int, default=10, help="number of events")
    p_sim.add_argument("--m", type=int, default=100, help="number of samples")
    p_sim.add_argument("--nu", type=float, default=0.0, help="noise rate")
    p_sim.add_argument("--w-star", dest="w_star", type=int, default=2, help="max parents per node")
    p_sim.add_argument("--semantics", default="conjunctive", choices=["conjunctive", "disjunctive"])
    p_sim.add_argument("--p-min", dest="p_min", type=float, default=0.05)
    p_sim.add_argument("--p-max", dest="p_max", type=float, default=0.95)
    p_sim.add_argument("--lethality", action="store_true", help="use the 3-event exclusivity model")
    p_sim.add_argument("--p-preferential", dest="p_preferential", type=float, default=0.7)
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_eval = sub.add_parser("evaluate", help="score an inferred model against ground truth")
    p_eval.add_argument("truth", help="truth.json written by simulate")
    p_eval.add_argument("inferred", help="model.json written by infer")
    p_eval.add_argument("-o", "--output", default=None)
    common(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("benchmark", help="run a reconstruction accuracy grid")
    p_bench.add_argument("-o", "--output", required=True)
    p_bench.add_argument("--topologies", default="tree,forest,connected_dag,disconnected_dag")
    p_bench.add_argument("--n", type=int, default=10)
    p_bench.add_argument("--w-star", dest="w_star", type=int, default=2)
    p_bench.add_argument("--models", type=int, default=None, help="models per topology (default 100 * scale)")
    p_bench.add_argument("--datasets", type=int, default=None, help="datasets per model (default 10 * scale)")
    p_bench.add_argument("--m-grid", dest="m_grid", default="50,100,150,200,250")
    p_bench.add_argument("--nu-grid", dest="nu_grid", default="0.0")
    p_bench.add_argument("--semantics", default="conjunctive", choices=["conjunctive", "disjunctive"])
    p_bench.add_argument("--p-min", dest="p_min", type=float, default=None,
                         help="lower conditional-rate bound for generated models")
    p_bench.add_argument("--p-max", dest="p_max", type=float, default=None)
    p_bench.add_argument("--scale", type=float, default=1.0, help="shrink ensemble sizes for desk-scale runs")
    p_bench.add_argument("--alpha", type=float, default=None)
    p_bench.add_argument("--bootstrap-k", dest="bootstrap_k", type=int, default=None)
    p_bench.add_argument("--parent-cap", dest="parent_cap", type=int, default=None)
    p_bench.add_argument("--algorithm", default=None, choices=["full", "prima-facie"])
    p_bench.add_argument("--jobs", type=int, default=None, help="worker processes")
    p_bench.add_argument("--plot", action="store_true", help="emit SVG line plots of HD vs m and HD vs nu")
    common(p_bench)
    p_bench.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProgressaError as exc:
        print(json.dumps({"error": exc.payload()}, sort_keys=True), file=sys.stdout)
        return 1
    except OSError as exc:
        print(json.dumps({"error": {"code": "io", "message": str(exc)}}, sort_keys=True))
        return 1


if __name__ == "__main__":
    sys.exit(main())
