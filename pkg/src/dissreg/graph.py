"""Spatio-temporal neighbourhood graph driving an augmented error signal.

Nodes are points of the input space met along the trajectory. Each node stores
a function value (or the running mean of the supervisions it received).
Temporal edges count how often one node follows another; spatial weights are
Gaussian in the distance between node positions. At every step the error fed
to the online recursion mixes the external supervision error with the
disagreement against temporal predecessors and spatial neighbours.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .integrator import Propagator, impulse_gain
from .operators import CompanionSystem, OperatorSpec
from .signals import Trajectory


@dataclass
class ErnNode:
    position: np.ndarray
    value: float = 0.0
    supervised: bool = False
    supervision_count: int = 0


@dataclass
class ErnGraph:
    epsilon: float
    sigma: float
    rho: int = 1
    eta: float = 0.5
    nodes: list[ErnNode] = field(default_factory=list)
    # temporal_counts[cur][prev] = times node `cur` followed node `prev`
    temporal_counts: dict[int, dict[int, int]] = field(default_factory=lambda: defaultdict(dict))
    last_visited: Optional[int] = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.rho < 1:
            raise ValueError("rho must be >= 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    @property
    def gamma(self) -> float:
        return 1.0 - self.eta

    def __len__(self):
        return len(self.nodes)

    def normalizer(self, k: int) -> int:
        row = self.temporal_counts.get(k)
        return max(row.values()) if row else 0

    def _check(self, k: int):
        if not 0 <= k < len(self.nodes):
            raise IndexError(f"no node with id {k}")


def match_or_insert(g: ErnGraph, x) -> tuple[int, bool]:
    """Node for input ``x``: the last visited if within epsilon, else the nearest within
    epsilon, else a new node at ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if g.last_visited is not None:
        if np.linalg.norm(x - g.nodes[g.last_visited].position) <= g.epsilon:
            return g.last_visited, False
    if g.nodes:
        dist = np.linalg.norm(np.array([n.position for n in g.nodes]) - x, axis=1)
        j = int(np.argmin(dist))
        if dist[j] <= g.epsilon:
            g.last_visited = j
            return j, False
    g.nodes.append(ErnNode(x.copy()))
    g.last_visited = len(g.nodes) - 1
    return g.last_visited, True


def record_transition(g: ErnGraph, prev: int, cur: int) -> int:
    g._check(prev)
    g._check(cur)
    row = g.temporal_counts[cur]
    row[prev] = row.get(prev, 0) + 1
    return row[prev]


def spatial_neighbors(g: ErnGraph, k: int) -> list[tuple[int, float]]:
    """Up to ``rho`` other nodes, heaviest Gaussian weight first (ties by id)."""
    g._check(k)
    if len(g.nodes) < 2:
        return []
    pos = np.array([n.position for n in g.nodes])
    d2 = np.sum((pos - pos[k]) ** 2, axis=1)
    w = np.exp(-d2 / (2 * g.sigma**2))
    others = [j for j in range(len(g.nodes)) if j != k]
    others.sort(key=lambda j: (-w[j], j))
    return [(j, float(w[j])) for j in others[:g.rho]]


def estimate_sigma(samples) -> float:
    """Mean Euclidean distance over all unordered pairs of samples."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if len(samples) < 2:
        raise ValueError("need at least two samples to estimate sigma")
    dists = [np.linalg.norm(a - b) for a, b in combinations(samples, 2)]
    sigma = float(np.mean(dists))
    if sigma == 0:
        raise ValueError("degenerate kernel: all samples coincide, sigma = 0")
    return sigma


def estimate_epsilon(samples) -> float:
    """Half the mean distance between consecutive samples."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if len(samples) < 2:
        raise ValueError("need at least two samples to estimate epsilon")
    return 0.5 * float(np.mean(np.linalg.norm(np.diff(samples, axis=0), axis=1)))


def error_signal(g: ErnGraph, k: int, ftilde: float, supervision: Optional[float]) -> float:
    g._check(k)
    e = 0.0 if supervision is None else ftilde - supervision
    row = g.temporal_counts.get(k)
    if row:
        norm = max(row.values())
        e += g.eta / norm * sum(c * (ftilde - g.nodes[j].value) for j, c in row.items())
    neigh = spatial_neighbors(g, k)
    e += g.gamma / g.rho * sum(w * (ftilde - g.nodes[s].value) for s, w in neigh)
    return e


def store_value(g: ErnGraph, k: int, ftilde: float, supervision: Optional[float]) -> None:
    g._check(k)
    node = g.nodes[k]
    if supervision is not None:
        node.supervision_count += 1
        if node.supervised:
            node.value += (supervision - node.value) / node.supervision_count
        else:
            node.value = float(supervision)
            node.supervised = True
    elif not node.supervised:
        node.value = float(ftilde)


def st_forward_step(f, sys: CompanionSystem, spec: OperatorSpec, b_k: float, E: float,
                    step: float, prop: Propagator | None = None) -> np.ndarray:
    prop = prop or Propagator(sys, step)
    return prop.advance(np.asarray(f, dtype=float), E / (impulse_gain(spec) * b_k))


@dataclass
class GraphRunLog:
    mse_per_epoch: np.ndarray
    f_tilde: np.ndarray
    error: np.ndarray
    states: np.ndarray
    node_count: np.ndarray
    final_state: np.ndarray
    diverged: bool = False


def run_graph(traj: Trajectory, sys: CompanionSystem, spec: OperatorSpec, graph: ErnGraph,
              epochs: int, step: float, initial_state=None, supervised_epochs: int | None = None) -> GraphRunLog:
    """Online learning with the graph-augmented error, cycling the data for ``epochs``."""
    prop = Propagator(sys, step)
    f = np.zeros(sys.n) if initial_state is None else np.array(initial_state, dtype=float)
    supervised_epochs = epochs if supervised_epochs is None else supervised_epochs
    total = epochs * len(traj)
    ft_log = np.empty(total)
    e_log = np.empty(total)
    states = np.empty((total + 1, sys.n))
    counts = np.empty(total, dtype=int)
    mse = np.empty(epochs)
    states[0] = f
    k = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for e in range(epochs):
            for i in range(len(traj)):
                prev = graph.last_visited
                node, _ = match_or_insert(graph, traj.x[i])
                if prev is not None:
                    record_transition(graph, prev, node)
                ft = prop.midpoint_value(f)
                target = float(traj.y[i]) if e < supervised_epochs else None
                E = error_signal(graph, node, ft, target)
                f = st_forward_step(f, sys, spec, float(traj.b[i]), E, step, prop)
                store_value(graph, node, ft, target)
                ft_log[k] = ft
                e_log[k] = E
                counts[k] = len(graph)
                k += 1
                states[k] = f
            mse[e] = np.mean((ft_log[k - len(traj):k] - traj.y) ** 2)
    diverged = bool(not np.all(np.isfinite(states)) or np.max(np.abs(states)) > 1e12)
    return GraphRunLog(mse, ft_log, e_log, states, counts, f, diverged)


def snapshot_rows(g: ErnGraph):
    """``(node_rows, edge_rows)`` with headers, ready for CSV export."""
    d = len(g.nodes[0].position) if g.nodes else 1
    node_rows = [["id", *[f"pos_{i}" for i in range(d)], "value", "supervised", "supervision_count"]]
    for i, n in enumerate(g.nodes):
        node_rows.append([i, *n.position.tolist(), n.value, int(n.supervised), n.supervision_count])
    edge_rows = [["cur", "prev", "count"]]
    for cur in sorted(g.temporal_counts):
        for prev in sorted(g.temporal_counts[cur]):
            edge_rows.append([cur, prev, g.temporal_counts[cur][prev]])
    return node_rows, edge_rows
