"""Shared helpers: independent brute-force augmentation oracle and tiny builders.

The oracle enumerates every provenance tuple, computes its weight directly
from the per-variable conditional ratio definition with its own plain-loop
arithmetic, and filters on the FINAL weight. It shares no code with the
recursive pruned expansion it is used to check.
"""

import itertools
import math

import numpy as np
import pytest

from causalaug.data import Dataset
from causalaug.graph import generate_erdos_renyi_dag, validate_dag


def brute_force_augment(X, graph, theta, bandwidths):
    """All (provenance, weight) pairs with final weight > theta.

    ``bandwidths`` maps column index -> bandwidth for that column when used
    as a conditioning dimension. Returns dict {tuple: weight}.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    anc = [sorted(graph.ancestor_sets[j]) for j in range(d)]
    result = {}
    for tup in itertools.product(range(n), repeat=d):
        w = 1.0
        for j in range(d):
            a = anc[j]
            if not a:
                w *= 1.0 / n
                continue
            z = [X[tup[c], c] for c in a]
            donor = tup[j]

            def kern(row):
                s = 0.0
                for dim, c in enumerate(a):
                    u = (z[dim] - X[row, c]) / bandwidths[c]
                    s += u * u
                return math.exp(-0.5 * s)

            denom = sum(kern(k) for k in range(n))
            w *= kern(donor) / denom if denom > 0 else 0.0
        if w > theta:
            result[tup] = w
    return result


def random_instance(seed, n=None, d=None):
    """Small random training table plus a random DAG over its columns."""
    rng = np.random.default_rng(seed)
    n = n if n is not None else int(rng.integers(3, 6))
    d = d if d is not None else int(rng.integers(2, 5))
    graph = generate_erdos_renyi_dag(d, float(rng.uniform(0.0, d - 1)), seed + 1)
    X = rng.normal(size=(n, d))
    return Dataset(values=X), graph


def chain_graph(d):
    return validate_dag({(j, j + 1) for j in range(d - 1)}, d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240 + 17)
