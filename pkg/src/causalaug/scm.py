"""Synthetic structural-causal-model generator.

A model is a random DAG plus, for every node with parents, one mechanism
drawn from a parametric family, and for every source node a 4-component
Gaussian mixture with spherical (scalar, per component) spread. Exogenous
noise is i.i.d. standard normal scaled by ``noise_amplitude``; it is added to
the mechanism output for every family except the neural net, where it enters
as an extra input concatenated with the causes.

Mechanism families and their parameter draws:

* linear:           y = X @ W,                    W ~ U[0,1]^D
* polynomial:       y = sum_i (X**i) @ W_i,       W_i ~ U[0,1]^D, degree 2
* sigmoid:          y = sum_i (1+a) b(X_i+c) / (1 + |b(X_i+c)|)
                    a ~ Exp(rate 4), b ~ +-U([0.5, 2]), c ~ U[-2, 2]
* gaussian_process: one fixed draw approximated with 100 random Fourier
                    features of an RBF kernel (unit lengthscale and variance)
* neural_net:       y = tanh([X, E] @ W_in) @ W_out, 20 hidden units,
                    Glorot-uniform init
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DimensionError
from .graph import CausalGraph, generate_erdos_renyi_dag, graph_to_json, validate_dag

LINEAR = "linear"
POLYNOMIAL = "polynomial"
SIGMOID = "sigmoid"
GAUSSIAN_PROCESS = "gaussian_process"
NEURAL_NET = "neural_net"
MECHANISM_KINDS = (LINEAR, POLYNOMIAL, SIGMOID, GAUSSIAN_PROCESS, NEURAL_NET)

_HIDDEN_UNITS = 20
_FOURIER_FEATURES = 100
_GMM_COMPONENTS = 4


@dataclass(frozen=True)
class MechanismSpec:
    """One sampled mechanism: family name plus its coefficient payload."""

    kind: str
    n_causes: int
    params: dict

    def __post_init__(self):
        if self.kind not in MECHANISM_KINDS:
            raise ValueError(f"unknown mechanism kind {self.kind!r}")


@dataclass(frozen=True)
class SourceGmm:
    means: tuple
    sds: tuple
    mix: tuple


@dataclass(frozen=True)
class ScmModel:
    graph: CausalGraph
    mechanisms: tuple   # MechanismSpec per node, None for sources
    sources: tuple      # SourceGmm per node, None for non-sources
    noise_amplitude: float
    mechanism_kind: str
    seed: int


def _derive_rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def _sample_mechanism(kind: str, n_causes: int, rng: np.random.Generator,
                      poly_degree: int = 2) -> MechanismSpec:
    if kind == LINEAR:
        params = {"w": rng.uniform(0.0, 1.0, n_causes)}
    elif kind == POLYNOMIAL:
        params = {"w": rng.uniform(0.0, 1.0, (poly_degree + 1, n_causes))}
    elif kind == SIGMOID:
        a = rng.exponential(scale=0.25)
        flip = rng.random() < 0.5
        b = rng.uniform(-2.0, -0.5) if flip else rng.uniform(0.5, 2.0)
        c = rng.uniform(-2.0, 2.0)
        params = {"a": a, "b": b, "c": c}
    elif kind == GAUSSIAN_PROCESS:
        params = {
            "omega": rng.standard_normal((_FOURIER_FEATURES, n_causes)),
            "phase": rng.uniform(0.0, 2.0 * math.pi, _FOURIER_FEATURES),
            "amp": rng.standard_normal(_FOURIER_FEATURES),
        }
    elif kind == NEURAL_NET:
        fan_in = n_causes + 1
        lim_in = math.sqrt(6.0 / (fan_in + _HIDDEN_UNITS))
        lim_out = math.sqrt(6.0 / (_HIDDEN_UNITS + 1))
        params = {
            "w_in": rng.uniform(-lim_in, lim_in, (fan_in, _HIDDEN_UNITS)),
            "w_out": rng.uniform(-lim_out, lim_out, _HIDDEN_UNITS),
        }
    else:
        raise ValueError(f"unknown mechanism kind {kind!r}")
    return MechanismSpec(kind=kind, n_causes=n_causes, params=params)


def generate_scm(d: int, expected_degree: float, mechanism_kind: str,
                 noise_amplitude: float, seed: int, poly_degree: int = 2) -> ScmModel:
    """Sample graph, per-node mechanisms, and per-source mixtures.

    Deterministic given the seed; the graph, each node's mechanism, and each
    source's mixture use independent derived streams, so structural params do
    not shift when unrelated pieces are resampled.
    """
    if mechanism_kind not in MECHANISM_KINDS:
        raise ValueError(f"unknown mechanism kind {mechanism_kind!r}")
    if noise_amplitude < 0:
        raise ValueError("noise_amplitude must be >= 0")
    graph_seed = int(_derive_rng(seed, 0).integers(0, 2**63 - 1))
    graph = generate_erdos_renyi_dag(d, expected_degree, graph_seed)

    mechanisms, sources = [], []
    for node in range(d):
        parents = sorted(graph.parent_sets[node])
        rng = _derive_rng(seed, 1, node)
        if parents:
            mechanisms.append(_sample_mechanism(mechanism_kind, len(parents), rng,
                                                poly_degree))
            sources.append(None)
        else:
            mechanisms.append(None)
            means = rng.uniform(-2.0, 2.0, _GMM_COMPONENTS)
            sds = rng.uniform(0.3, 1.0, _GMM_COMPONENTS)
            mix = rng.dirichlet(np.ones(_GMM_COMPONENTS))
            sources.append(SourceGmm(means=tuple(means), sds=tuple(sds), mix=tuple(mix)))
    return ScmModel(graph=graph, mechanisms=tuple(mechanisms), sources=tuple(sources),
                    noise_amplitude=float(noise_amplitude), mechanism_kind=mechanism_kind,
                    seed=int(seed))


def mechanism_outputs(spec: MechanismSpec, parent_values, noise) -> np.ndarray:
    """Evaluate one mechanism on a batch of parent rows.

    ``noise`` is already scaled by the model's amplitude. It is added to the
    output for every family except the neural net, which consumes it as an
    input column.
    """
    P = np.atleast_2d(np.asarray(parent_values, dtype=np.float64))
    e = np.asarray(noise, dtype=np.float64).ravel()
    if P.shape[1] != spec.n_causes:
        raise DimensionError(f"{P.shape[1]} parent columns, mechanism expects {spec.n_causes}")
    if e.shape[0] != P.shape[0]:
        raise DimensionError("noise length must match the number of rows")
    p = spec.params
    if spec.kind == LINEAR:
        return P @ p["w"] + e
    if spec.kind == POLYNOMIAL:
        out = np.zeros(P.shape[0])
        for i, w_i in enumerate(p["w"]):
            out += (P ** i) @ w_i
        return out + e
    if spec.kind == SIGMOID:
        t = p["b"] * (P + p["c"])
        return (1.0 + p["a"]) * np.sum(t / (1.0 + np.abs(t)), axis=1) + e
    if spec.kind == GAUSSIAN_PROCESS:
        z = math.sqrt(2.0 / _FOURIER_FEATURES) * np.cos(P @ p["omega"].T + p["phase"])
        return z @ p["amp"] + e
    if spec.kind == NEURAL_NET:
        z = np.column_stack([P, e])
        return np.tanh(z @ p["w_in"]) @ p["w_out"]
    raise ValueError(f"unknown mechanism kind {spec.kind!r}")


def evaluate_mechanism(spec: MechanismSpec, parent_values, noise: float) -> float:
    """Single-point mechanism evaluation (same path as the batch form)."""
    return float(mechanism_outputs(spec, np.atleast_2d(parent_values), [noise])[0])


def sample_dataset(model: ScmModel, n: int, sample_seed: int) -> Dataset:
    """Draw n rows: sources from their mixtures, children in topological order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = model.graph.node_count
    values = np.zeros((n, d))
    rng = np.random.default_rng(np.random.SeedSequence([int(sample_seed)]))
    for node in model.graph.topo_order:
        if model.sources[node] is not None:
            gmm = model.sources[node]
            comp = rng.choice(_GMM_COMPONENTS, size=n, p=np.asarray(gmm.mix))
            values[:, node] = rng.normal(np.asarray(gmm.means)[comp],
                                         np.asarray(gmm.sds)[comp])
        else:
            parents = sorted(model.graph.parent_sets[node])
            noise = model.noise_amplitude * rng.standard_normal(n)
            values[:, node] = mechanism_outputs(model.mechanisms[node],
                                                values[:, parents], noise)
    return Dataset(values=values, columns=tuple(f"x{j}" for j in range(d)))


def inject_outliers(data: Dataset, fraction: float, magnitude_sigmas: float,
                    seed: int):
    """Corrupt a random subset of rows with extreme values.

    Selects ceil(fraction * n) rows without replacement; every column of a
    selected row is replaced by the clean column mean plus or minus
    ``magnitude_sigmas`` clean standard deviations, the sign drawn per cell.
    Returns the new table and the array of corrupted row indices.
    """
    if not (0.0 <= fraction <= 1.0):
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if magnitude_sigmas <= 0:
        raise ValueError("magnitude_sigmas must be positive")
    n, d = data.values.shape
    # round before ceil so 0.1 * 100 style float fuzz cannot bump the count
    k = int(math.ceil(round(fraction * n, 9)))
    values = data.values.copy()
    if k == 0:
        return Dataset(values=values, columns=data.columns), np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    rows = np.sort(rng.choice(n, size=k, replace=False))
    mu = values.mean(axis=0)
    sigma = values.std(axis=0)
    signs = rng.integers(0, 2, size=(k, d)) * 2 - 1
    values[rows] = mu[None, :] + signs * magnitude_sigmas * sigma[None, :]
    return Dataset(values=values, columns=data.columns), rows


def model_to_json(model: ScmModel) -> dict:
    """Full parameter payload for reproducibility audits."""
    nodes = []
    for j in range(model.graph.node_count):
        if model.sources[j] is not None:
            g = model.sources[j]
            nodes.append({"node": j, "source_gmm": {
                "means": list(g.means), "sds": list(g.sds), "mix": list(g.mix)}})
        else:
            m = model.mechanisms[j]
            payload = {k: (v.tolist() if isinstance(v, np.ndarray) else float(v))
                       for k, v in m.params.items()}
            nodes.append({"node": j, "mechanism": {"kind": m.kind,
                                                   "n_causes": m.n_causes,
                                                   "params": payload}})
    return {
        "graph": graph_to_json(model.graph),
        "noise_amplitude": model.noise_amplitude,
        "mechanism_kind": model.mechanism_kind,
        "seed": model.seed,
        "nodes": nodes,
    }


def model_from_json(payload: dict) -> ScmModel:
    graph = validate_dag([tuple(e) for e in payload["graph"]["edges"]],
                         int(payload["graph"]["d"]))
    d = graph.node_count
    mechanisms = [None] * d
    sources = [None] * d
    for entry in payload["nodes"]:
        j = int(entry["node"])
        if "source_gmm" in entry:
            g = entry["source_gmm"]
            sources[j] = SourceGmm(means=tuple(g["means"]), sds=tuple(g["sds"]),
                                   mix=tuple(g["mix"]))
        else:
            m = entry["mechanism"]
            params = {k: (np.asarray(v) if isinstance(v, list) else float(v))
                      for k, v in m["params"].items()}
            mechanisms[j] = MechanismSpec(kind=m["kind"], n_causes=int(m["n_causes"]),
                                          params=params)
    return ScmModel(graph=graph, mechanisms=tuple(mechanisms), sources=tuple(sources),
                    noise_amplitude=float(payload["noise_amplitude"]),
                    mechanism_kind=payload["mechanism_kind"], seed=int(payload["seed"]))


def save_model(model: ScmModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh)
        fh.write("\n")


def load_model(path) -> ScmModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))
