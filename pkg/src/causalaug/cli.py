"""Command-line surface: generate | augment | metrics | bench | sweep.

Exit codes: 0 success, 1 usage or config error, 2 runtime failure. Runtime
failures print a machine-readable JSON object on stderr, e.g.
``{"error": {"kind": "empty_result", ...}}`` so sweep orchestration can
classify capacity versus whole-set filtering versus IO problems. Every
command that consumes randomness requires an explicit seed; there is no
implicit clock seeding. Each run prints the resolved seed lineage with its
stats so any output can be replayed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .augment import (DEFAULT_MAX_POINTS, augment as build_augmented_set,
                     fraction_filtered, fraction_new, load_augmented_csv,
                     save_augmented_csv)
from .data import Dataset
from .errors import CapacityError, ConfigError, EmptyResultError
from .experiments import (CONFIG_SCHEMA_VERSION, ScenarioConfig, ScenarioReport,
                          run_repetition)
from .graph import load_graph
from .kernels import build_kernel_specs
from .metrics import compare_weighted_tables
from .scm import MECHANISM_KINDS, generate_scm, sample_dataset, save_model


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _runtime_error(kind: str, message: str, **details) -> int:
    payload = {"error": {"kind": kind, "message": message, **details}}
    print(json.dumps(payload), file=sys.stderr)
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="causalaug",
                     description="Causal data augmentation toolkit")
    parser.add_argument("--version", action="version",
                        version=f"causalaug {__version__} (config schema v{CONFIG_SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="sample a synthetic dataset from a random causal model")
    p.add_argument("--d", type=int, default=10, help="number of variables")
    p.add_argument("--degree", type=float, default=3.0, help="expected degree of the random DAG")
    p.add_argument("--mechanism", choices=MECHANISM_KINDS, default="neural_net")
    p.add_argument("--noise", type=float, default=0.4, help="additive noise amplitude")
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.add_argument("--model-out", help="optional model JSON path")

    p = sub.add_parser("augment", help="augment a dataset CSV given its causal graph")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--graph", required=True, help="graph JSON (or a generated model JSON)")
    p.add_argument("--theta", type=float, required=True, help="pruning threshold in [0, 1)")
    p.add_argument("--max-points", type=int, default=DEFAULT_MAX_POINTS)
    p.add_argument("--out", required=True, help="augmented CSV path")

    p = sub.add_parser("metrics", help="distribution distances between two tables")
    p.add_argument("--orig", required=True, help="reference dataset CSV")
    p.add_argument("--aug", required=True,
                   help="comparison CSV; augmented CSVs contribute their weights")
    p.add_argument("--out", help="optional JSON output path (default: stdout only)")

    p = sub.add_parser("bench", help="single benchmark repetition, baseline vs augmented")
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--degree", type=float, default=3.0)
    p.add_argument("--mechanism", choices=MECHANISM_KINDS, default="neural_net")
    p.add_argument("--noise", type=float, default=0.4)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, default=1e-2)
    p.add_argument("--outlier-fraction", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="optional CSV path for the per-target rows")

    p = sub.add_parser("sweep", help="run a scenario sweep from a JSON config")
    p.add_argument("--config", required=True, help="sweep config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=0,
                   help="worker threads (default: available cores)")

    return parser


def _cmd_generate(args) -> int:
    try:
        model = generate_scm(args.d, args.degree, args.mechanism, args.noise, args.seed)
        data = sample_dataset(model, args.n, args.seed)
        data.to_csv(args.out)
        if args.model_out:
            save_model(model, args.model_out)
    except OSError as exc:
        return _runtime_error("io", str(exc))
    print(json.dumps({"seed": args.seed, "rows": args.n, "columns": args.d,
                      "out": args.out, "model_out": args.model_out}))
    return 0


def _cmd_augment(args) -> int:
    data = Dataset.from_csv(args.data)
    graph = load_graph(args.graph)
    if graph.node_count != data.d:
        print(f"causalaug augment: graph has {graph.node_count} nodes, "
              f"data has {data.d} columns", file=sys.stderr)
        return 1
    specs = build_kernel_specs(data.values, graph, data.discrete)
    try:
        aug = build_augmented_set(data, graph, args.theta, specs, args.max_points)
    except EmptyResultError as exc:
        return _runtime_error("empty_result", str(exc), depth=exc.depth, theta=exc.theta)
    except CapacityError as exc:
        return _runtime_error("capacity", str(exc), frontier_size=exc.frontier_size,
                              depth=exc.depth, max_points=exc.max_points)
    try:
        save_augmented_csv(aug, args.out)
    except OSError as exc:
        return _runtime_error("io", str(exc))
    print(json.dumps({
        "size": len(aug),
        "frac_new": fraction_new(aug),
        "frac_filtered": fraction_filtered(aug),
        "theta": args.theta,
        "out": args.out,
    }))
    return 0


def _load_table_with_weights(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if "weight" in header and "provenance" in header:
        aug = load_augmented_csv(path)
        total = float(np.sum(aug.weights))
        return aug.points, aug.weights / total if total > 0 else None
    return Dataset.from_csv(path).values, None


def _cmd_metrics(args) -> int:
    a_vals, a_w = _load_table_with_weights(args.orig)
    b_vals, b_w = _load_table_with_weights(args.aug)
    if a_vals.shape[1] != b_vals.shape[1]:
        print(f"causalaug metrics: column mismatch "
              f"({a_vals.shape[1]} vs {b_vals.shape[1]})", file=sys.stderr)
        return 1
    report = compare_weighted_tables(a_vals, b_vals, a_weights=a_w, b_weights=b_w)
    text = json.dumps(report.to_json())
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def _cmd_bench(args) -> int:
    config = ScenarioConfig(
        axis="theta", axis_values=(args.theta,), repetitions=1,
        master_seed=args.seed, n_samples=args.n, dimension=args.d,
        expected_degree=args.degree, noise_amplitude=args.noise,
        mechanism=args.mechanism, outlier_fraction=args.outlier_fraction,
        theta=args.theta)
    rows = run_repetition(config, args.theta, 0)
    report = ScenarioReport(config=config, rows=rows)
    if args.out:
        report.to_csv(args.out)
    summary = report.summary_json()
    summary["seed_lineage"] = {k: rows[0][k] for k in
                               ("seed_scm", "seed_sample", "seed_split",
                                "seed_outliers", "seed_learner")}
    print(json.dumps(summary))
    return 0


def _cmd_sweep(args) -> int:
    try:
        config = ScenarioConfig.from_json_file(args.config)
    except ConfigError as exc:
        print(f"causalaug sweep: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        return _runtime_error("io", str(exc))

    from .experiments import run_sweep

    def progress(line):
        print(line, file=sys.stderr)

    report = run_sweep(config, threads=args.threads or None, progress=progress)
    try:
        csv_path, json_path = report.write(args.out)
    except OSError as exc:
        return _runtime_error("io", str(exc))
    print(json.dumps({"master_seed": config.master_seed, "csv": csv_path,
                      "summary": json_path, "rows": len(report.rows)}))
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "augment": _cmd_augment,
    "metrics": _cmd_metrics,
    "bench": _cmd_bench,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        return _runtime_error("io", str(exc))
    except (ValueError,) as exc:
        print(f"causalaug {args.command}: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
