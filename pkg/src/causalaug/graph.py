"""Causal DAG representation: topological order, ancestor sets, random generation.

Graphs are immutable once built, so they can be shared freely across threads.
The JSON file format is ``{"d": int, "edges": [[parent, child], ...]}``.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass

import numpy as np

from .errors import CycleError


@dataclass(frozen=True)
class CausalGraph:
    node_count: int
    edges: frozenset
    topo_order: tuple
    ancestor_sets: tuple
    parent_sets: tuple

    @property
    def d(self) -> int:
        return self.node_count


def validate_dag(edges, d: int) -> CausalGraph:
    """Build a CausalGraph from an edge set, or fail.

    The topological order is computed with Kahn's algorithm, ties broken by
    ascending node index, so it is a pure function of the edge set.
    Ancestor sets are the transitive closure of the parent relation.

    Raises CycleError on a directed cycle, IndexError on out-of-range nodes.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    edge_set = frozenset((int(u), int(v)) for u, v in edges)
    for u, v in edge_set:
        if not (0 <= u < d and 0 <= v < d):
            raise IndexError(f"edge ({u}, {v}) outside [0, {d})")
        if u == v:
            raise CycleError(f"self-loop on node {u}")

    children = [[] for _ in range(d)]
    parents = [set() for _ in range(d)]
    indegree = [0] * d
    for u, v in edge_set:
        children[u].append(v)
        parents[v].add(u)
        indegree[v] += 1

    ready = [u for u in range(d) if indegree[u] == 0]
    heapq.heapify(ready)
    topo = []
    while ready:
        u = heapq.heappop(ready)
        topo.append(u)
        for v in children[u]:
            indegree[v] -= 1
            if indegree[v] == 0:
                heapq.heappush(ready, v)
    if len(topo) != d:
        raise CycleError("edge set contains a directed cycle")

    ancestors = [set() for _ in range(d)]
    for v in topo:
        for p in parents[v]:
            ancestors[v].add(p)
            ancestors[v] |= ancestors[p]

    return CausalGraph(
        node_count=d,
        edges=edge_set,
        topo_order=tuple(topo),
        ancestor_sets=tuple(frozenset(a) for a in ancestors),
        parent_sets=tuple(frozenset(p) for p in parents),
    )


def ancestors(graph: CausalGraph, j: int) -> frozenset:
    """Ancestor set of node j (read-only)."""
    if not (0 <= j < graph.node_count):
        raise IndexError(f"node {j} outside [0, {graph.node_count})")
    return graph.ancestor_sets[j]


def generate_erdos_renyi_dag(d: int, expected_degree: float, seed: int) -> CausalGraph:
    """Sample a random DAG with a target mean total degree.

    Each unordered pair is connected with probability
    ``p = min(1, expected_degree / (d - 1))`` and oriented along a uniformly
    random node permutation, which guarantees acyclicity by construction.
    Deterministic given the seed.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if expected_degree < 0:
        raise ValueError(f"expected_degree must be >= 0, got {expected_degree}")
    p = min(1.0, expected_degree / (d - 1))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(d)
    position = np.empty(d, dtype=np.int64)
    position[perm] = np.arange(d)

    pairs = [(u, v) for u in range(d) for v in range(u + 1, d)]
    draws = rng.random(len(pairs))
    edges = set()
    for (u, v), r in zip(pairs, draws):
        if r < p:
            if position[u] < position[v]:
                edges.add((u, v))
            else:
                edges.add((v, u))
    return validate_dag(edges, d)


def graph_to_json(graph: CausalGraph) -> dict:
    return {"d": graph.node_count, "edges": sorted([u, v] for u, v in graph.edges)}


def save_graph(graph: CausalGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_json(graph), fh)
        fh.write("\n")


def load_graph(path) -> CausalGraph:
    """Read a graph JSON file and validate it."""
    with open(path) as fh:
        payload = json.load(fh)
    if "edges" not in payload or "d" not in payload:
        # generator model files carry the graph under a "graph" key
        if "graph" in payload:
            payload = payload["graph"]
        else:
            raise ValueError("graph JSON needs keys 'd' and 'edges'")
    return validate_dag([tuple(e) for e in payload["edges"]], int(payload["d"]))
