"""Scenario sweeps: per-repetition benchmark pipeline and report aggregation.

One repetition at a given axis value runs the full pipeline:

    generate model -> sample n rows -> 70/30 split -> corrupt the training
    portion (outlier scenarios only) -> augment the training set -> for each
    variable as target, grid-search + fit a baseline model on the training
    rows (uniform weights) and a second model on the augmented points (raw
    weights) -> score both on the held-out test rows -> distribution metrics.

Every repetition derives its random streams from
``SeedSequence([master_seed, axis_index, repetition, stream, extra])``, so
any cell can be replayed in isolation and results are independent of
execution order. Whole-set filtering during augmentation is recorded as an
``all_filtered`` row rather than an error.

Report rows omit wall-clock time so a rerun of the same configuration
produces byte-identical CSV output; timing lives in the JSON summary.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .augment import (DEFAULT_MAX_POINTS, augment as build_augmented_set,
                      fraction_filtered, fraction_new, normalized_weights)
from .data import Dataset, format_float
from .errors import CapacityError, ConfigError, DegenerateError, EmptyResultError
from .kernels import build_kernel_specs
from .learner import GbtParams, fit, grid_search_cv, predict
from .metrics import compare_weighted_tables, mape, r2
from .scm import MECHANISM_KINDS, generate_scm, inject_outliers, sample_dataset

AXES = ("mechanism", "n_samples", "dimension", "expected_degree",
        "noise_amplitude", "outlier_fraction", "theta")

DEFAULT_AXIS_VALUES = {
    "mechanism": list(MECHANISM_KINDS),
    "n_samples": [30, 40, 60, 80, 100, 300, 500, 700],
    "dimension": [7, 8, 9, 10, 15, 20, 25],
    "expected_degree": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
    "noise_amplitude": [0.1, 0.2, 0.4, 0.6, 0.8, 1.0],
    "outlier_fraction": [0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.15],
    "theta": [1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
}

# stream tags for per-repetition seed derivation
_S_SCM, _S_SAMPLE, _S_SPLIT, _S_OUTLIER, _S_LEARNER = range(5)

CONFIG_SCHEMA_VERSION = 1

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": f"causalaug sweep config v{CONFIG_SCHEMA_VERSION}",
    "type": "object",
    "additionalProperties": False,
    "required": ["axis", "master_seed"],
    "properties": {
        "axis": {"enum": list(AXES)},
        "axis_values": {"type": "array", "minItems": 1},
        "master_seed": {"type": "integer", "minimum": 0},
        "repetitions": {"type": "integer", "minimum": 1},
        "n_samples": {"type": "integer", "minimum": 4},
        "dimension": {"type": "integer", "minimum": 2},
        "expected_degree": {"type": "number", "minimum": 0},
        "noise_amplitude": {"type": "number", "minimum": 0},
        "theta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "outlier_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "mechanism": {"enum": list(MECHANISM_KINDS)},
        "split_ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "cv_folds": {"type": "integer", "minimum": 2},
        "n_estimators_grid": {"type": "array", "minItems": 1,
                              "items": {"type": "integer", "minimum": 1}},
        "reg_lambda_grid": {"type": "array", "minItems": 1,
                            "items": {"type": "number", "minimum": 0}},
        "max_points": {"type": "integer", "minimum": 1},
        "outlier_magnitude": {"type": "number", "exclusiveMinimum": 0},
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative sweep definition; defaults match the benchmark table."""

    axis: str
    master_seed: int
    axis_values: tuple = ()
    repetitions: int = 20
    n_samples: int = 300
    dimension: int = 10
    expected_degree: float = 3.0
    noise_amplitude: float = 0.4
    theta: float = 1e-2
    outlier_fraction: float = 0.0
    mechanism: str = "neural_net"
    split_ratio: float = 0.7
    cv_folds: int = 3
    n_estimators_grid: tuple = (10, 50, 200)
    reg_lambda_grid: tuple = (1.0, 10.0, 100.0)
    max_points: int = DEFAULT_MAX_POINTS
    outlier_magnitude: float = 5.0

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown axis {self.axis!r}, valid axes: {', '.join(AXES)}")
        values = tuple(self.axis_values) or tuple(DEFAULT_AXIS_VALUES[self.axis])
        if len(set(values)) != len(values):
            raise ConfigError("axis_values must be unique")
        object.__setattr__(self, "axis_values", values)
        object.__setattr__(self, "n_estimators_grid", tuple(self.n_estimators_grid))
        object.__setattr__(self, "reg_lambda_grid", tuple(self.reg_lambda_grid))
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not (0.0 < self.split_ratio < 1.0):
            raise ConfigError("split_ratio must be in (0, 1)")
        if self.axis == "mechanism":
            bad = [v for v in values if v not in MECHANISM_KINDS]
            if bad:
                raise ConfigError(f"unknown mechanism values {bad}")

    def learner_grid(self):
        return [GbtParams(n_estimators=t, reg_lambda=float(l))
                for t in self.n_estimators_grid for l in self.reg_lambda_grid]

    def to_json(self) -> dict:
        return {
            "axis": self.axis,
            "axis_values": list(self.axis_values),
            "master_seed": self.master_seed,
            "repetitions": self.repetitions,
            "n_samples": self.n_samples,
            "dimension": self.dimension,
            "expected_degree": self.expected_degree,
            "noise_amplitude": self.noise_amplitude,
            "theta": self.theta,
            "outlier_fraction": self.outlier_fraction,
            "mechanism": self.mechanism,
            "split_ratio": self.split_ratio,
            "cv_folds": self.cv_folds,
            "n_estimators_grid": list(self.n_estimators_grid),
            "reg_lambda_grid": list(self.reg_lambda_grid),
            "max_points": self.max_points,
            "outlier_magnitude": self.outlier_magnitude,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ScenarioConfig":
        import jsonschema

        try:
            jsonschema.validate(payload, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            pointer = "/" + "/".join(str(p) for p in exc.absolute_path)
            raise ConfigError(f"config field {pointer or '/'}: {exc.message}") from exc
        kwargs = dict(payload)
        if "axis_values" in kwargs:
            kwargs["axis_values"] = tuple(kwargs["axis_values"])
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def resolve_params(config: ScenarioConfig, axis_value) -> dict:
    """The seven scenario knobs with the swept axis overridden."""
    params = {
        "mechanism": config.mechanism,
        "n_samples": config.n_samples,
        "dimension": config.dimension,
        "expected_degree": config.expected_degree,
        "noise_amplitude": config.noise_amplitude,
        "outlier_fraction": config.outlier_fraction,
        "theta": config.theta,
    }
    if config.axis == "mechanism":
        params["mechanism"] = str(axis_value)
    elif config.axis in ("n_samples", "dimension"):
        params[config.axis] = int(axis_value)
    else:
        params[config.axis] = float(axis_value)
    return params


def derive_seed(master_seed: int, rep_index: int, stream: int,
                extra: int = 0) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(rep_index),
                                 int(stream), int(extra)])
    return int(ss.generate_state(1, np.uint64)[0])


def derive_cell_seeds(config: ScenarioConfig, axis_value, rep_index: int) -> dict:
    """Named seed lineage of one cell, as recorded in its report rows.

    Seeds depend on (master_seed, repetition) only: the same repetition sees
    the same generated data at every axis value, so sweeping an axis that
    only changes processing (theta, outlier fraction) compares like with
    like, and the pruning-monotonicity trends hold per repetition.
    """
    del axis_value  # part of the lineage API, not of the derivation
    return {
        "seed_scm": derive_seed(config.master_seed, rep_index, _S_SCM),
        "seed_sample": derive_seed(config.master_seed, rep_index, _S_SAMPLE),
        "seed_split": derive_seed(config.master_seed, rep_index, _S_SPLIT),
        "seed_outliers": derive_seed(config.master_seed, rep_index, _S_OUTLIER),
        "seed_learner": derive_seed(config.master_seed, rep_index, _S_LEARNER),
    }


REPORT_COLUMNS = [
    "axis", "axis_value", "repetition", "target",
    "mechanism", "n_samples", "dimension", "expected_degree",
    "noise_amplitude", "theta", "outlier_fraction",
    "mape_baseline", "mape_augmented", "r2_baseline", "r2_augmented",
    "frac_new", "frac_filtered", "all_filtered", "aug_set_size",
    "kl_orig_aug", "wasserstein_orig_aug", "variance_rel_diff",
    "kl_corrupt_clean", "wasserstein_corrupt_clean",
    "variance_rel_diff_corrupt_clean",
    "baseline_params", "augmented_params",
    "seed_scm", "seed_sample", "seed_split", "seed_outliers", "seed_learner",
    "error",
]

_METRIC_COLUMNS = [
    "mape_baseline", "mape_augmented", "r2_baseline", "r2_augmented",
    "frac_new", "frac_filtered", "aug_set_size",
    "kl_orig_aug", "wasserstein_orig_aug", "variance_rel_diff",
    "kl_corrupt_clean", "wasserstein_corrupt_clean",
    "variance_rel_diff_corrupt_clean",
]


def _params_str(p: GbtParams) -> str:
    return f"n_estimators={p.n_estimators};reg_lambda={format_float(p.reg_lambda)}"


def _choose_and_fit(features, target, weights, grid, folds, seed):
    """Grid search when the data can fill the folds, tie-break order otherwise."""
    n = features.shape[0]
    if n >= max(2, folds):
        best = grid_search_cv(features, target, weights, grid, folds, seed)
    else:
        best = min(grid, key=lambda p: (p.n_estimators, -p.reg_lambda))
    return best, fit(features, target, weights, best, seed=seed)


def run_repetition(config: ScenarioConfig, axis_value, rep_index: int) -> list:
    """All report rows (one per target variable) for a single repetition."""
    params = resolve_params(config, axis_value)
    seeds = derive_cell_seeds(config, axis_value, rep_index)
    d = params["dimension"]
    n = params["n_samples"]
    t_start = time.perf_counter()

    model = generate_scm(d, params["expected_degree"], params["mechanism"],
                         params["noise_amplitude"], seeds["seed_scm"])
    data = sample_dataset(model, n, seeds["seed_sample"])

    rng_split = np.random.default_rng(np.random.SeedSequence([seeds["seed_split"]]))
    perm = rng_split.permutation(n)
    n_train = min(max(int(round(config.split_ratio * n)), 2), n - 1)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    clean_train = data.values[train_idx]
    test_values = data.values[test_idx]

    if params["outlier_fraction"] > 0:
        corrupted, _ = inject_outliers(Dataset(clean_train), params["outlier_fraction"],
                                       config.outlier_magnitude, seeds["seed_outliers"])
        train_values = corrupted.values
    else:
        train_values = clean_train

    base = {
        "axis": config.axis, "axis_value": axis_value, "repetition": rep_index,
        "mechanism": params["mechanism"], "n_samples": n, "dimension": d,
        "expected_degree": params["expected_degree"],
        "noise_amplitude": params["noise_amplitude"], "theta": params["theta"],
        "outlier_fraction": params["outlier_fraction"],
        **seeds,
        "error": "",
    }

    aug_set, aug_error, all_filtered = None, "", False
    try:
        specs = build_kernel_specs(train_values, model.graph)
        aug_set = build_augmented_set(Dataset(train_values), model.graph, params["theta"],
                                  specs, config.max_points)
    except EmptyResultError:
        all_filtered = True
    except CapacityError as exc:
        aug_error = f"capacity: {exc}"

    shared = dict(base)
    shared["all_filtered"] = all_filtered
    shared["error"] = aug_error
    if aug_set is not None:
        shared["aug_set_size"] = len(aug_set)
        shared["frac_new"] = fraction_new(aug_set)
        shared["frac_filtered"] = fraction_filtered(aug_set)
        try:
            report = compare_weighted_tables(train_values, aug_set.points,
                                             b_weights=normalized_weights(aug_set))
            shared["kl_orig_aug"] = report.kl_divergence
            shared["wasserstein_orig_aug"] = report.wasserstein
            shared["variance_rel_diff"] = report.variance_rel_diff
        except DegenerateError:
            shared["kl_orig_aug"] = math.nan
            shared["wasserstein_orig_aug"] = math.nan
            shared["variance_rel_diff"] = math.nan
    else:
        shared["aug_set_size"] = 0 if all_filtered else math.nan
        shared["frac_new"] = 0.0 if all_filtered else math.nan
        shared["frac_filtered"] = 1.0 if all_filtered else math.nan
        shared["kl_orig_aug"] = math.nan
        shared["wasserstein_orig_aug"] = math.nan
        shared["variance_rel_diff"] = math.nan

    shared["kl_corrupt_clean"] = math.nan
    shared["wasserstein_corrupt_clean"] = math.nan
    shared["variance_rel_diff_corrupt_clean"] = math.nan
    if params["outlier_fraction"] > 0 and aug_set is not None:
        # same pipeline on the clean training set, for corruption propagation
        clean_aug = None
        try:
            clean_specs = build_kernel_specs(clean_train, model.graph)
            clean_aug = build_augmented_set(Dataset(clean_train), model.graph,
                                        params["theta"], clean_specs, config.max_points)
        except (EmptyResultError, CapacityError):
            pass
        if clean_aug is not None:
            try:
                cmp_report = compare_weighted_tables(
                    aug_set.points, clean_aug.points,
                    a_weights=normalized_weights(aug_set),
                    b_weights=normalized_weights(clean_aug))
                shared["kl_corrupt_clean"] = cmp_report.kl_divergence
                shared["wasserstein_corrupt_clean"] = cmp_report.wasserstein
                shared["variance_rel_diff_corrupt_clean"] = cmp_report.variance_rel_diff
            except DegenerateError:
                pass

    grid = config.learner_grid()
    rows = []
    feature_cols = {t: [j for j in range(d) if j != t] for t in range(d)}
    for target in range(d):
        row = dict(shared)
        row["target"] = target
        cols = feature_cols[target]
        y_test = test_values[:, target]
        try:
            seed_b = derive_seed(config.master_seed, rep_index, _S_LEARNER, target)
            best_b, model_b = _choose_and_fit(
                train_values[:, cols], train_values[:, target],
                np.full(n_train, 1.0 / n_train), grid, config.cv_folds, seed_b)
            pred_b = predict(model_b, test_values[:, cols])
            row["baseline_params"] = _params_str(best_b)
            row["mape_baseline"] = mape(y_test, pred_b)
            row["r2_baseline"] = r2(y_test, pred_b)
        except DegenerateError as exc:
            row["baseline_params"] = ""
            row["mape_baseline"] = math.nan
            row["r2_baseline"] = math.nan
            row["error"] = (row["error"] + "; " if row["error"] else "") + f"baseline: {exc}"

        row["augmented_params"] = ""
        row["mape_augmented"] = math.nan
        row["r2_augmented"] = math.nan
        if aug_set is not None and len(aug_set) >= 1:
            try:
                seed_a = derive_seed(config.master_seed, rep_index, _S_LEARNER,
                                     d + target)
                best_a, model_a = _choose_and_fit(
                    aug_set.points[:, cols], aug_set.points[:, target],
                    aug_set.weights, grid, config.cv_folds, seed_a)
                pred_a = predict(model_a, test_values[:, cols])
                row["augmented_params"] = _params_str(best_a)
                row["mape_augmented"] = mape(y_test, pred_a)
                row["r2_augmented"] = r2(y_test, pred_a)
            except DegenerateError as exc:
                row["error"] = (row["error"] + "; " if row["error"] else "") + f"augmented: {exc}"
        rows.append(row)

    wall = time.perf_counter() - t_start
    for row in rows:
        row["wall_time"] = wall
    return rows


@dataclass
class ScenarioReport:
    """Long-format rows plus aggregation and serialization helpers."""

    config: ScenarioConfig
    rows: list = field(default_factory=list)

    def sorted_rows(self) -> list:
        index = {v: i for i, v in enumerate(self.config.axis_values)}

        def key(row):
            target = row.get("target")
            return (index.get(row["axis_value"], len(index)), row["repetition"],
                    -1 if target is None else target)

        return sorted(self.rows, key=key)

    def aggregates(self) -> dict:
        out = {}
        for value in self.config.axis_values:
            rows = [r for r in self.rows if r["axis_value"] == value]
            entry = {"rows": len(rows)}
            for col in _METRIC_COLUMNS:
                vals = np.asarray([_as_float(r.get(col)) for r in rows])
                finite = vals[np.isfinite(vals)]
                entry[col] = {
                    "median": float(np.median(finite)) if finite.size else None,
                    "mean": float(np.mean(finite)) if finite.size else None,
                }
            flags = [bool(r.get("all_filtered")) for r in rows]
            entry["all_filtered_rate"] = float(np.mean(flags)) if flags else None
            entry["errors"] = sum(1 for r in rows if r.get("error"))
            out[str(value)] = entry
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_COLUMNS)
            for row in self.sorted_rows():
                writer.writerow([_csv_cell(row.get(col)) for col in REPORT_COLUMNS])

    def findings(self) -> dict:
        """Headline trend checks recorded alongside the aggregates.

        For sample-size sweeps: whether the median held-out R2 advantage of
        the augmented model over the baseline is larger at n in {300, 500,
        700} than at n in {30, 40, 60}. None when either side has no finite
        gap (for instance when augmentation was entirely filtered there).
        """
        out = {}
        if self.config.axis == "n_samples":
            def median_gap(values):
                gaps = [_as_float(r.get("r2_augmented")) - _as_float(r.get("r2_baseline"))
                        for r in self.rows if r["axis_value"] in values]
                finite = [g for g in gaps if math.isfinite(g)]
                return float(np.median(finite)) if finite else None

            small = median_gap({30, 40, 60})
            large = median_gap({300, 500, 700})
            met = None if small is None or large is None else bool(large > small)
            out["sample_size_trend"] = {
                "median_r2_gap_small_n": small,
                "median_r2_gap_large_n": large,
                "met": met,
            }
        return out

    def summary_json(self) -> dict:
        times = [r.get("wall_time") for r in self.rows if r.get("wall_time") is not None]
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "config": self.config.to_json(),
            "aggregates": self.aggregates(),
            "findings": self.findings(),
            "wall_time_total": float(np.sum(times)) if times else 0.0,
        }

    def write(self, out_dir) -> tuple:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"sweep_{self.config.axis}.csv")
        json_path = os.path.join(out_dir, f"sweep_{self.config.axis}_summary.json")
        self.to_csv(csv_path)
        with open(json_path, "w") as fh:
            json.dump(self.summary_json(), fh, indent=2)
            fh.write("\n")
        return csv_path, json_path


def _as_float(v):
    if v is None or v == "":
        return math.nan
    if isinstance(v, bool):
        return float(v)
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else format_float(v)
    if isinstance(v, (np.floating,)):
        f = float(v)
        return "" if math.isnan(f) else format_float(f)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def run_sweep(config: ScenarioConfig, threads: int | None = None,
              progress=None) -> ScenarioReport:
    """Run repetitions x axis_values; per-cell failures are recorded, not fatal.

    Cells are independent jobs executed on a thread pool; rows are keyed and
    sorted afterwards, so the report does not depend on scheduling.
    """
    jobs = [(value, rep) for value in config.axis_values
            for rep in range(config.repetitions)]

    def one(job):
        value, rep = job
        try:
            rows = run_repetition(config, value, rep)
        except Exception as exc:  # per-cell resilience
            rows = [{
                "axis": config.axis, "axis_value": value, "repetition": rep,
                "target": None, "all_filtered": False,
                "error": f"{type(exc).__name__}: {exc}",
                **derive_cell_seeds(config, value, rep),
            }]
        if progress is not None:
            progress(f"axis_value={value} repetition={rep} rows={len(rows)}")
        return rows

    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    report = ScenarioReport(config=config)
    if workers == 1:
        for job in jobs:
            report.rows.extend(one(job))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rows in pool.map(one, jobs):
                report.rows.extend(rows)
    return report
