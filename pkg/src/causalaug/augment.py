"""Recursive pruned cartesian-product augmentation over a causal DAG.

The augmented set is the cartesian product of the observed per-variable
values, processed in topological order. A partial point carries the product
of its per-variable conditional weight factors; extensions whose running
weight does not exceed the threshold ``theta`` are dropped immediately.

Because every factor is at most 1 (the numerator kernel value is one term of
the denominator sum, and the source convention contributes exactly 1/n), the
running weight is non-increasing, so pruning on partial products retains
exactly the tuples whose *final* weight exceeds ``theta``. Pruning happens
while extending each variable in turn rather than after the full product is
formed; the output is identical, only the memory profile differs.

With ``theta = 0`` the retained weights form a probability distribution over
the n^d provenance tuples (each expansion stage's factors sum to 1 per
prefix), so the total mass is 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, format_float
from .errors import CapacityError, DimensionError, EmptyError, EmptyResultError
from .graph import CausalGraph
from .kernels import GAUSSIAN, KernelSpec

DEFAULT_MAX_POINTS = 5_000_000

# prefix rows processed per block when evaluating kernel factors, keeps the
# (block, n) temporaries at a few tens of MB
_BLOCK_ELEMENTS = 4_000_000


@dataclass
class AugmentedSet:
    """Weighted augmented points plus the donor-row index of every value.

    ``points[i, j]`` is copied verbatim from ``train[provenance[i, j], j]``;
    values are never interpolated. Rows are sorted lexicographically by
    provenance tuple, so serial and parallel runs compare bit-for-bit.
    """

    points: np.ndarray
    weights: np.ndarray
    provenance: np.ndarray
    theta: float
    n_source: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.provenance = np.asarray(self.provenance, dtype=np.int64)

    def __len__(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def augment(train: Dataset, graph: CausalGraph, theta: float, specs,
            max_points: int = DEFAULT_MAX_POINTS) -> AugmentedSet:
    """Build the weighted augmented set for a training table.

    Parameters
    ----------
    train : Dataset
        Training table, at least 2 rows; columns may be in any order, they
        are reindexed to the graph's topological order internally and the
        output is restored to the caller's order.
    graph : CausalGraph
        DAG over the table's columns.
    theta : float in [0, 1)
        Pruning threshold; a point survives only while its running weight is
        strictly greater than theta.
    specs : sequence of KernelSpec
        One per variable, dimensioned by that variable's ancestor set.
    max_points : int
        Upper bound on the retained frontier size at any stage.

    Raises
    ------
    EmptyResultError
        When every candidate was pruned (the whole set filtered).
    CapacityError
        When the retained frontier would exceed ``max_points``.
    """
    X = train.values
    n, d = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 training rows, got {n}")
    if not (0.0 <= theta < 1.0):
        raise ValueError(f"theta must be in [0, 1), got {theta}")
    if graph.node_count != d:
        raise DimensionError(f"graph has {graph.node_count} nodes, table has {d} columns")
    if len(specs) != d:
        raise DimensionError(f"{len(specs)} kernel specs for {d} variables")
    if max_points < 1:
        raise ValueError("max_points must be positive")

    topo = list(graph.topo_order)
    pos_of = {node: t for t, node in enumerate(topo)}

    # the first topological variable always has an empty ancestor set
    weights = np.full(n, 1.0 / n)
    prov = np.arange(n, dtype=np.int64).reshape(n, 1)
    keep = weights > theta
    weights, prov = weights[keep], prov[keep]
    if weights.size == 0:
        raise EmptyResultError(depth=0, theta=theta)

    for t in range(1, d):
        v = topo[t]
        anc = sorted(graph.ancestor_sets[v])
        spec = specs[v]
        if spec.kind == GAUSSIAN and len(spec.bandwidths) != len(anc):
            raise DimensionError(
                f"kernel for variable {v} has {len(spec.bandwidths)} dims, "
                f"ancestor set has {len(anc)}"
            )

        if not anc:
            # source convention: every donor gets the constant factor 1/n
            new_w = weights / n
            keep_prefix = np.flatnonzero(new_w > theta)
            retained = keep_prefix.size * n
            _check_capacity(retained, t, max_points)
            if retained == 0:
                raise EmptyResultError(depth=t, theta=theta)
            prov = np.column_stack([
                np.repeat(prov[keep_prefix], n, axis=0),
                np.tile(np.arange(n, dtype=np.int64), keep_prefix.size),
            ])
            weights = np.repeat(new_w[keep_prefix], n)
            continue

        anc_pos = np.asarray([pos_of[a] for a in anc], dtype=np.int64)
        train_anc = X[:, anc]
        out_w, out_prov = [], []
        retained = 0
        block = max(1, _BLOCK_ELEMENTS // n)
        for start in range(0, weights.shape[0], block):
            stop = min(start + block, weights.shape[0])
            prov_blk = prov[start:stop]
            w_blk = weights[start:stop]
            # ancestor values of each partial point, gathered from the donors
            # that supplied them (column order follows the sorted ancestor set)
            z_anc = X[prov_blk[:, anc_pos], anc]
            factors = _factor_block(spec, z_anc, train_anc)
            cand = w_blk[:, None] * factors
            pref_idx, donor_idx = np.nonzero(cand > theta)
            retained += pref_idx.size
            _check_capacity(retained, t, max_points)
            if pref_idx.size:
                out_w.append(cand[pref_idx, donor_idx])
                out_prov.append(np.column_stack([prov_blk[pref_idx],
                                                 donor_idx.astype(np.int64)]))
        if retained == 0:
            raise EmptyResultError(depth=t, theta=theta)
        weights = np.concatenate(out_w)
        prov = np.concatenate(out_prov, axis=0)

    # restore the caller's column order and sort canonically
    prov_orig = np.empty_like(prov)
    prov_orig[:, np.asarray(topo)] = prov
    order = np.lexsort(tuple(prov_orig[:, j] for j in range(d - 1, -1, -1)))
    prov_orig = prov_orig[order]
    points = X[prov_orig, np.arange(d)[None, :]]
    return AugmentedSet(points=points, weights=weights[order], provenance=prov_orig,
                        theta=theta, n_source=n)


def _factor_block(spec: KernelSpec, z_anc, train_anc):
    """Kernel weight factors for a block of partial points against all donors.

    Same arithmetic as kernels.weight_factor, vectorized; a zero denominator
    yields zero factors (prunable) instead of NaN.
    """
    b, m = z_anc.shape
    n = train_anc.shape[0]
    if spec.kind == GAUSSIAN:
        sq = np.zeros((b, n))
        h = spec.bandwidths
        for j in range(m):
            sq += ((z_anc[:, j, None] - train_anc[None, :, j]) / h[j]) ** 2
        k = np.exp(-0.5 * sq)
    else:
        match = np.ones((b, n), dtype=bool)
        for j in range(m):
            match &= z_anc[:, j, None] == train_anc[None, :, j]
        k = match.astype(np.float64)
    denom = np.sum(k, axis=1)
    safe = np.where(denom == 0.0, 1.0, denom)
    factors = k / safe[:, None]
    factors[denom == 0.0] = 0.0
    return factors


def _check_capacity(retained: int, depth: int, max_points: int) -> None:
    if retained > max_points:
        raise CapacityError(frontier_size=retained, depth=depth, max_points=max_points)


def fraction_new(aug: AugmentedSet) -> float:
    """Share of retained points that are not reconstructions of training rows.

    A point is "new" when its provenance tuple is not constant. Single-column
    problems therefore always report 0.
    """
    if len(aug) == 0:
        raise EmptyError("augmented set is empty")
    diagonal = np.all(aug.provenance == aug.provenance[:, :1], axis=1)
    return float(1.0 - np.count_nonzero(diagonal) / len(aug))


def fraction_filtered(aug: AugmentedSet) -> float:
    """Share of the n^d candidate tuples pruned by the threshold.

    Computed in log space so large d cannot overflow; an empty set reports 1.
    """
    if len(aug) == 0:
        return 1.0
    log_ratio = math.log(len(aug)) - aug.d * math.log(aug.n_source)
    return min(1.0, max(0.0, 1.0 - math.exp(log_ratio)))


def normalized_weights(aug: AugmentedSet) -> np.ndarray:
    """Weights rescaled to sum to 1; the stored raw weights are untouched."""
    total = float(np.sum(aug.weights))
    if total <= 0.0:
        raise ValueError("total weight must be positive")
    return aug.weights / total


def save_augmented_csv(aug: AugmentedSet, path) -> None:
    """Write points as columns z_1..z_d plus weight and dash-joined provenance."""
    d = aug.d
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"z_{j + 1}" for j in range(d)] + ["weight", "provenance"])
        for row, w, tup in zip(aug.points, aug.weights, aug.provenance):
            writer.writerow([format_float(v) for v in row]
                            + [format_float(w), "-".join(str(int(i)) for i in tup)])


def load_augmented_csv(path) -> AugmentedSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = len(header) - 2
        points, weights, prov = [], [], []
        for row in reader:
            if not row:
                continue
            points.append([float(v) for v in row[:d]])
            weights.append(float(row[d]))
            prov.append([int(i) for i in row[d + 1].split("-")])
    prov_arr = np.asarray(prov, dtype=np.int64)
    n_source = int(prov_arr.max()) + 1 if prov_arr.size else 0
    return AugmentedSet(points=np.asarray(points), weights=np.asarray(weights),
                        provenance=prov_arr, theta=math.nan, n_source=n_source)
