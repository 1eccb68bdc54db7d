"""Weight-aware gradient-boosted regression trees with L2 leaf regularization.

Squared-error objective with per-row weights w: second-order boosting where
each leaf takes the value ``sum(w * residual) / (sum(w) + reg_lambda)`` and
splits are found by exact greedy search over every feature and every distinct
value boundary, maximizing

    G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda) - G^2 / (H + lambda)

with G the weighted residual sum and H the weight sum of a node. Ties are
broken deterministically: lowest feature index, then lowest threshold. There
is no subsampling and no other randomness, so a fitted model is a pure
function of (features, target, weights, params); the seed arguments are
accepted for interface stability and feed only the CV fold shuffle.

Because each boosting round depends only on the previous predictions, the
first k trees of a fit equal the k-tree fit exactly; grid search exploits
this by fitting once per fold at the largest tree count and scoring staged
predictions.

Training with all weights scaled by a constant changes nothing when
reg_lambda is 0 (the constant cancels in every leaf and gain); with
reg_lambda > 0 the effective regularization strength shifts, which is the
reason raw augmentation weights and uniform 1/n baselines are both used
as-is, never rescaled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DimensionError, LengthError


@dataclass(frozen=True)
class GbtParams:
    n_estimators: int = 100
    reg_lambda: float = 1.0
    learning_rate: float = 0.3
    max_depth: int = 6
    min_child_weight: float = 0.0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be >= 0")
        if self.min_child_weight < 0:
            raise ValueError("min_child_weight must be >= 0")


@dataclass
class GbtModel:
    """Fitted ensemble stored as heap-indexed arrays, one row per tree.

    ``features[t, i] == -1`` marks node i of tree t as a leaf with output
    ``values[t, i]``; internal nodes route to child ``2i+1`` when
    ``x[feature] < threshold`` and ``2i+2`` otherwise. Prediction is
    ``base_score + learning_rate * sum(tree outputs)``.
    """

    features: np.ndarray
    thresholds: np.ndarray
    values: np.ndarray
    base_score: float
    params: GbtParams
    n_inputs: int

    @property
    def n_trees(self) -> int:
        return self.features.shape[0]


@njit(cache=True, nogil=True)
def _build_tree(X, order, g, h, max_depth, min_child_weight, reg_lambda):  # pragma: no cover
    n, m = X.shape
    max_nodes = 2 ** (max_depth + 1) - 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    value = np.zeros(max_nodes)
    node_of = np.zeros(n, np.int64)

    for depth in range(max_depth + 1):
        lo = 2 ** depth - 1
        width = lo + 1
        G = np.zeros(width)
        H = np.zeros(width)
        active = np.zeros(width, np.bool_)
        for i in range(n):
            nd = node_of[i]
            if nd >= lo:
                rel = nd - lo
                G[rel] += g[i]
                H[rel] += h[i]
                active[rel] = True

        if depth == max_depth:
            for rel in range(width):
                if active[rel]:
                    value[lo + rel] = -G[rel] / (H[rel] + reg_lambda)
            break

        best_gain = np.zeros(width)
        best_feat = np.full(width, -1, np.int64)
        best_thr = np.zeros(width)
        run_g = np.zeros(width)
        run_h = np.zeros(width)
        last_x = np.zeros(width)
        started = np.zeros(width, np.bool_)

        for f in range(m):
            for rel in range(width):
                run_g[rel] = 0.0
                run_h[rel] = 0.0
                started[rel] = False
            for k in range(n):
                i = order[f, k]
                nd = node_of[i]
                if nd < lo:
                    continue
                rel = nd - lo
                x = X[i, f]
                if started[rel] and x > last_x[rel]:
                    thr = 0.5 * (last_x[rel] + x)
                    if thr > last_x[rel]:
                        hl = run_h[rel]
                        hr = H[rel] - hl
                        if hl >= min_child_weight and hr >= min_child_weight:
                            gl = run_g[rel]
                            gr = G[rel] - gl
                            gain = (gl * gl / (hl + reg_lambda)
                                    + gr * gr / (hr + reg_lambda)
                                    - G[rel] * G[rel] / (H[rel] + reg_lambda))
                            if gain > best_gain[rel]:
                                best_gain[rel] = gain
                                best_feat[rel] = f
                                best_thr[rel] = thr
                run_g[rel] += g[i]
                run_h[rel] += h[i]
                last_x[rel] = x
                started[rel] = True

        any_split = False
        for rel in range(width):
            if not active[rel]:
                continue
            nd = lo + rel
            if best_feat[rel] < 0:
                value[nd] = -G[rel] / (H[rel] + reg_lambda)
            else:
                feature[nd] = best_feat[rel]
                threshold[nd] = best_thr[rel]
                any_split = True
        if not any_split:
            break
        for i in range(n):
            nd = node_of[i]
            if nd >= lo and feature[nd] >= 0:
                if X[i, feature[nd]] < threshold[nd]:
                    node_of[i] = 2 * nd + 1
                else:
                    node_of[i] = 2 * nd + 2

    row_values = np.empty(n)
    for i in range(n):
        row_values[i] = value[node_of[i]]
    return feature, threshold, value, row_values


@njit(cache=True, nogil=True)
def _predict_trees(X, features, thresholds, values, n_trees):  # pragma: no cover
    n = X.shape[0]
    out = np.zeros(n)
    for t in range(n_trees):
        for i in range(n):
            nd = 0
            while features[t, nd] >= 0:
                if X[i, features[t, nd]] < thresholds[t, nd]:
                    nd = 2 * nd + 1
                else:
                    nd = 2 * nd + 2
            out[i] += values[t, nd]
    return out


def _validate_training_arrays(features, target, weights):
    X = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    if X.ndim != 2:
        raise DimensionError("features must be a 2-D matrix")
    y = np.asarray(target, dtype=np.float64).ravel()
    w = np.asarray(weights, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0] or w.shape[0] != X.shape[0]:
        raise LengthError(
            f"{X.shape[0]} rows, {y.shape[0]} targets, {w.shape[0]} weights")
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    return X, y, w


def fit(features, target, weights, params: GbtParams, seed: int = 0) -> GbtModel:
    """Fit the boosted ensemble on weighted rows.

    A constant target yields a constant model (base score only), not an
    error. Accepts a single row as a degenerate constant fit.
    """
    X, y, w = _validate_training_arrays(features, target, weights)
    n, m = X.shape
    base = float(np.dot(w, y) / np.sum(w))
    max_nodes = 2 ** (params.max_depth + 1) - 1
    T = params.n_estimators
    feat_mat = np.full((T, max_nodes), -1, dtype=np.int64)
    thr_mat = np.zeros((T, max_nodes))
    val_mat = np.zeros((T, max_nodes))

    if n >= 2:
        order = np.empty((m, n), dtype=np.int64)
        for f in range(m):
            order[f] = np.argsort(X[:, f], kind="stable")
        pred = np.full(n, base)
        for t in range(T):
            grad = w * (pred - y)
            feature, threshold, value, row_values = _build_tree(
                X, order, grad, w, params.max_depth, params.min_child_weight,
                params.reg_lambda)
            feat_mat[t] = feature
            thr_mat[t] = threshold
            val_mat[t] = value
            pred = pred + params.learning_rate * row_values

    return GbtModel(features=feat_mat, thresholds=thr_mat, values=val_mat,
                    base_score=base, params=params, n_inputs=m)


def predict(model: GbtModel, features, n_trees: int | None = None) -> np.ndarray:
    """Deterministic ensemble prediction; optionally truncate to n_trees."""
    X = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise DimensionError(
            f"features must be 2-D with {model.n_inputs} columns")
    k = model.n_trees if n_trees is None else min(n_trees, model.n_trees)
    raw = _predict_trees(X, model.features, model.thresholds, model.values, k)
    return model.base_score + model.params.learning_rate * raw


def grid_search_cv(features, target, weights, grid, folds: int, seed: int) -> GbtParams:
    """Pick the grid point with the lowest weighted-MSE cross-validation score.

    Fold assignment is a seeded shuffle; weights enter both the per-fold fits
    and the validation averaging (pooled weighted SSE over pooled weight).
    Grid points sharing every parameter except n_estimators are fitted once
    per fold at the largest tree count and scored on staged predictions,
    which is exact because boosting is deterministic. Ties prefer fewer
    trees, then stronger regularization.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty parameter grid")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    X, y, w = _validate_training_arrays(features, target, weights)
    n = X.shape[0]
    if n < folds:
        raise ValueError(f"{n} rows cannot fill {folds} folds")

    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    fold_id = np.empty(n, dtype=np.int64)
    fold_id[rng.permutation(n)] = np.arange(n) % folds

    groups = {}
    for p in grid:
        key = (p.reg_lambda, p.learning_rate, p.max_depth, p.min_child_weight)
        groups.setdefault(key, set()).add(p.n_estimators)

    sse = {p: 0.0 for p in grid}
    wsum = {p: 0.0 for p in grid}
    for key, counts in sorted(groups.items()):
        reg_lambda, learning_rate, max_depth, min_child_weight = key
        t_max = max(counts)
        fit_params = GbtParams(n_estimators=t_max, reg_lambda=reg_lambda,
                               learning_rate=learning_rate, max_depth=max_depth,
                               min_child_weight=min_child_weight)
        for fold in range(folds):
            tr = fold_id != fold
            va = ~tr
            model = fit(X[tr], y[tr], w[tr], fit_params, seed=seed)
            for t in sorted(counts):
                p = GbtParams(n_estimators=t, reg_lambda=reg_lambda,
                              learning_rate=learning_rate, max_depth=max_depth,
                              min_child_weight=min_child_weight)
                if p in sse:
                    yhat = predict(model, X[va], n_trees=t)
                    sse[p] += float(np.dot(w[va], (y[va] - yhat) ** 2))
                    wsum[p] += float(np.sum(w[va]))

    def sort_key(p):
        return (sse[p] / wsum[p], p.n_estimators, -p.reg_lambda)

    return min(grid, key=sort_key)


def model_to_json(model: GbtModel) -> dict:
    """Nested tree list (feature, threshold, children, leaf value) for audits."""

    def node(t, i):
        if model.features[t, i] < 0:
            return {"leaf": float(model.values[t, i])}
        return {
            "feature": int(model.features[t, i]),
            "threshold": float(model.thresholds[t, i]),
            "left": node(t, 2 * i + 1),
            "right": node(t, 2 * i + 2),
        }

    return {
        "base_score": model.base_score,
        "learning_rate": model.params.learning_rate,
        "n_inputs": model.n_inputs,
        "params": {
            "n_estimators": model.params.n_estimators,
            "reg_lambda": model.params.reg_lambda,
            "learning_rate": model.params.learning_rate,
            "max_depth": model.params.max_depth,
            "min_child_weight": model.params.min_child_weight,
        },
        "trees": [node(t, 0) for t in range(model.n_trees)],
    }


def model_to_json_str(model: GbtModel) -> str:
    return json.dumps(model_to_json(model))
