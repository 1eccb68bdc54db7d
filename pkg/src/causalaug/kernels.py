"""Product kernels for the per-variable conditional weight factors.

Each variable j gets one kernel, dimensioned by its ancestor set: a product
Gaussian with per-dimension Silverman bandwidths for continuous variables, or
the identity kernel (exact match) for discrete ones.

The Gaussian kernels are deliberately *unnormalized*
(``exp(-u^2 / (2 h^2))`` per dimension, no ``1/(h sqrt(2 pi))`` prefactor):
every use is a ratio of a single kernel value over a sum of kernel values
across the training rows, so normalization constants cancel exactly, and
dropping them avoids spurious underflow for narrow bandwidths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DimensionError
from .graph import CausalGraph

GAUSSIAN = "gaussian"
IDENTITY = "identity"

#: substituted when a conditioning column has zero spread
BANDWIDTH_FLOOR = 1e-6


def silverman_bandwidth(samples) -> float:
    """Plug-in bandwidth 0.9 * min(std, IQR / 1.34) * n^(-1/5).

    Uses the sample standard deviation (ddof=1). Raises DegenerateError when
    the result would be zero (all samples identical, or interquartile range
    collapsed); callers substitute BANDWIDTH_FLOOR.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    std = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = float(q75 - q25)
    bw = 0.9 * min(std, iqr / 1.34) * n ** (-0.2)
    if bw <= 0.0:
        raise DegenerateError("sample spread is zero, bandwidth would be 0")
    return bw


@dataclass(frozen=True)
class KernelSpec:
    """Kernel for one variable, dimensioned by its ancestor count."""

    kind: str
    bandwidths: tuple = ()

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, IDENTITY):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "bandwidths", tuple(float(h) for h in self.bandwidths))
        if self.kind == GAUSSIAN and any(h <= 0 for h in self.bandwidths):
            raise ValueError("bandwidths must be strictly positive")

    @property
    def dim(self) -> int:
        return len(self.bandwidths) if self.kind == GAUSSIAN else -1


def build_kernel_specs(train_values, graph: CausalGraph, discrete=None) -> list:
    """One KernelSpec per variable, conditioned on that variable's ancestors.

    Bandwidths are computed once per conditioning column over the full
    training set, then reused by every kernel conditioning on that column.
    Degenerate columns fall back to BANDWIDTH_FLOOR.
    """
    X = np.asarray(train_values, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError("train_values must be 2-D")
    n, d = X.shape
    if d != graph.node_count:
        raise DimensionError(f"{d} columns for a graph on {graph.node_count} nodes")
    if discrete is None:
        discrete = (False,) * d

    column_bw = np.empty(d)
    for c in range(d):
        try:
            column_bw[c] = silverman_bandwidth(X[:, c])
        except DegenerateError:
            column_bw[c] = BANDWIDTH_FLOOR

    specs = []
    for j in range(d):
        anc = sorted(graph.ancestor_sets[j])
        if discrete[j]:
            specs.append(KernelSpec(kind=IDENTITY))
        else:
            specs.append(KernelSpec(kind=GAUSSIAN, bandwidths=tuple(column_bw[a] for a in anc)))
    return specs


def kernel_value(spec: KernelSpec, u) -> float:
    """Unnormalized kernel at displacement u.

    Gaussian: product over dimensions of exp(-u_m^2 / (2 h_m^2)).
    Identity: 1 if u is exactly zero, else 0.
    A zero-dimensional u returns 1.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    if spec.kind == IDENTITY:
        return 1.0 if np.all(u == 0.0) else 0.0
    h = np.asarray(spec.bandwidths)
    if u.size != h.size:
        raise DimensionError(f"displacement has {u.size} dims, kernel expects {h.size}")
    if u.size == 0:
        return 1.0
    return float(np.prod(np.exp(-(u * u) / (2.0 * h * h))))


def weight_factor(spec: KernelSpec, z_anc, donor_anc, train_anc) -> float:
    """Conditional weight factor of one donor for one variable.

    Returns ``K(z_anc - donor_anc) / sum_k K(z_anc - train_anc[k])``. With an
    empty ancestor set the factor is the source convention ``1/n``. If the
    denominator underflows to exactly zero (every training row astronomically
    far, or no exact identity match), the factor is defined as 0 so the point
    is prunable rather than an error.
    """
    train_anc = np.asarray(train_anc, dtype=np.float64)
    if train_anc.ndim != 2:
        raise DimensionError("train_anc must be an n x m matrix")
    n, m = train_anc.shape
    if n < 1:
        raise ValueError("need at least one training row")
    if m == 0:
        return 1.0 / n
    z = np.asarray(z_anc, dtype=np.float64).ravel()
    donor = np.asarray(donor_anc, dtype=np.float64).ravel()
    if z.size != m or donor.size != m:
        raise DimensionError(f"conditioning vectors must have {m} dims")

    if spec.kind == IDENTITY:
        numer = 1.0 if np.all(z == donor) else 0.0
        denom = float(np.sum(np.all(train_anc == z[None, :], axis=1)))
    else:
        h = np.asarray(spec.bandwidths)
        if h.size != m:
            raise DimensionError(f"kernel has {h.size} dims, conditioning has {m}")
        diff = z[None, :] - train_anc
        k_all = np.exp(-0.5 * np.sum((diff / h[None, :]) ** 2, axis=1))
        numer = float(np.exp(-0.5 * np.sum(((z - donor) / h) ** 2)))
        denom = float(np.sum(k_all))
    if denom == 0.0:
        return 0.0
    return numer / denom
