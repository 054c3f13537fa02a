"""Metric spaces built from undirected, unweighted graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .approx import ScatterReport, scatter_report
from .errors import DisconnectedGraphError, InputError, MagkitError
from .metric_core import DistanceMatrix, check_scale, similarity_matrix
from .weighting import WeightingVector, cholesky, spd_solve, weighting_vector


@dataclass(frozen=True)
class Graph:
    node_count: int
    edges: tuple

    def __post_init__(self):
        n = int(self.node_count)
        if n < 1:
            raise InputError("graph needs at least one node")
        seen = set()
        for e in self.edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise InputError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u}, {v}) references a node outside 0..{n - 1}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InputError(f"parallel edge {key}")
            seen.add(key)
        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def laplacian(self) -> np.ndarray:
        a = self.adjacency()
        return np.diag(a.sum(axis=1)) - a

    def components(self) -> list:
        if not self.edges:
            return [[i] for i in range(self.node_count)]
        u, v = np.array(self.edges).T
        m = coo_matrix((np.ones(u.size), (u, v)), shape=(self.node_count,) * 2)
        count, labels = connected_components(m, directed=False)
        return [np.flatnonzero(labels == c).tolist() for c in range(count)]


def read_edge_list(path) -> Graph:
    """One ``u v`` pair per line, 0-based; blank lines and ``#`` comments ignored.

    The node count is 1 + the largest index seen; a line holding a single
    integer declares an isolated node.
    """
    edges, top = [], -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                ids = [int(p) for p in parts]
            except ValueError:
                raise InputError(f"{path}:{lineno}: expected integer node ids, got {line!r}") from None
            if len(ids) == 1:
                top = max(top, ids[0])
                continue
            if len(ids) != 2 or min(ids) < 0:
                raise InputError(f"{path}:{lineno}: expected 'u v' with non-negative ids")
            edges.append(tuple(ids))
            top = max(top, *ids)
    if top < 0:
        raise InputError(f"{path}: no nodes found")
    return Graph(top + 1, tuple(edges))


def erdos_renyi(n: int, p: float, seed=0, connected: bool = True, max_tries: int = 1000) -> Graph:
    """G(n, p) sample; with ``connected`` the draw is repeated until connected."""
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    for _ in range(max_tries):
        keep = rng.random(iu[0].size) < p
        g = Graph(n, tuple(zip(iu[0][keep].tolist(), iu[1][keep].tolist())))
        if not connected or len(g.components()) == 1:
            return g
    raise MagkitError(f"no connected G({n}, {p}) sample in {max_tries} draws")


def _require_connected(g: Graph):
    comps = g.components()
    if len(comps) > 1:
        shown = "; ".join(str(c if len(c) <= 8 else c[:8] + ["..."]) for c in comps[:5])
        raise DisconnectedGraphError(f"graph has {len(comps)} components: {shown}", comps)


def shortest_path_metric(g: Graph) -> DistanceMatrix:
    """All-pairs hop distances."""
    _require_connected(g)
    if g.node_count == 1:
        return DistanceMatrix.from_array(np.zeros((1, 1)), "shortest_path")
    u, v = np.array(g.edges).T
    m = coo_matrix((np.ones(u.size), (u, v)), shape=(g.node_count,) * 2).tocsr()
    d = shortest_path(m, directed=False, unweighted=True)
    return DistanceMatrix.from_array(d, "shortest_path")


def laplacian_pinv(g: Graph) -> np.ndarray:
    """Moore-Penrose inverse of the Laplacian of a connected graph.

    L + J/n is positive definite on a connected graph and shares L's
    eigenvectors, so L^+ = (L + J/n)^-1 - J/n.
    """
    _require_connected(g)
    n = g.node_count
    j = np.full((n, n), 1.0 / n)
    inv = spd_solve(cholesky(g.laplacian() + j), np.eye(n))
    pinv = 0.5 * (inv + inv.T) - j
    return pinv


def resistance_metric(g: Graph) -> DistanceMatrix:
    """Effective resistance r(i, j) = L+_ii + L+_jj - 2 L+_ij."""
    lp = laplacian_pinv(g)
    diag = np.diag(lp)
    r = diag[:, None] + diag[None, :] - 2.0 * lp
    np.fill_diagonal(r, 0.0)
    r = np.maximum(0.5 * (r + r.T), 0.0)
    return DistanceMatrix.from_array(r, "resistance")


GRAPH_METRICS = {"shortest_path": shortest_path_metric, "resistance": resistance_metric}


@dataclass(frozen=True)
class GraphWeighting:
    """Outcome of a graph weighting attempt.

    Exactly one of ``weighting`` and ``failure`` is set.  ``suggested_t`` is a
    scale above the scattered threshold, at which zeta is guaranteed invertible.
    """

    weighting: WeightingVector | None
    report: ScatterReport
    metric: str
    t: float
    failure: str | None = None
    suggested_t: float | None = None

    @property
    def ok(self) -> bool:
        return self.weighting is not None


def graph_weighting(g: Graph, metric: str = "resistance", t=1.0) -> GraphWeighting:
    t = check_scale(t)
    if metric not in GRAPH_METRICS:
        raise InputError(f"unknown graph metric {metric!r}; expected one of {sorted(GRAPH_METRICS)}")
    dist = GRAPH_METRICS[metric](g)
    report = scatter_report(dist, t)
    try:
        wv = weighting_vector(similarity_matrix(dist, t, source="graph"))
    except MagkitError as exc:
        suggested = None
        if math.isfinite(report.t_required):
            suggested = max(report.t_required * 1.01, t)
        return GraphWeighting(None, report, metric, t, str(exc), suggested)
    return GraphWeighting(wv, report, metric, t)
