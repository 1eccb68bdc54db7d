"""Kernel-weighted causal data augmentation for tabular data.

Weighted pseudo-samples are built as the pruned cartesian product of the
observed per-variable values over a causal DAG, each point weighted by the
product of kernel-estimated conditional probabilities given its graph
ancestors. The package also ships the synthetic SCM generator, distribution
metrics, weighted tree-ensemble learner, and scenario runner used to
benchmark the method.
"""

__version__ = "0.1.0"

from .augment import AugmentedSet, augment, fraction_filtered, fraction_new, normalized_weights
from .data import Dataset
from .graph import CausalGraph, ancestors, generate_erdos_renyi_dag, validate_dag
from .kernels import KernelSpec, build_kernel_specs, kernel_value, silverman_bandwidth, weight_factor
from .learner import GbtModel, GbtParams, fit, grid_search_cv, predict
from .metrics import (DistributionReport, compare_weighted_tables,
                      kl_divergence_1d_weighted, mape, r2, variance_rel_diff,
                      wasserstein_1d_weighted)
from .scm import MechanismSpec, ScmModel, evaluate_mechanism, generate_scm, inject_outliers, sample_dataset
from .experiments import ScenarioConfig, ScenarioReport, run_repetition, run_sweep

__all__ = [
    "AugmentedSet", "augment", "fraction_filtered", "fraction_new", "normalized_weights",
    "Dataset",
    "CausalGraph", "ancestors", "generate_erdos_renyi_dag", "validate_dag",
    "KernelSpec", "build_kernel_specs", "kernel_value", "silverman_bandwidth", "weight_factor",
    "GbtModel", "GbtParams", "fit", "grid_search_cv", "predict",
    "DistributionReport", "compare_weighted_tables", "kl_divergence_1d_weighted",
    "mape", "r2", "variance_rel_diff", "wasserstein_1d_weighted",
    "MechanismSpec", "ScmModel", "evaluate_mechanism", "generate_scm",
    "inject_outliers", "sample_dataset",
    "ScenarioConfig", "ScenarioReport", "run_repetition", "run_sweep",
]
