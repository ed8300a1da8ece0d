"""Sparse directed graphs, random generators, and dependency-pair machinery.

Edge convention used everywhere in this package (and in the edge-list CSV
format): an edge is the ordered pair ``(target, source)``, meaning the
source node's period-0 outcome may influence the target node's period-1
outcome.  ``in_neighbors(i)`` are therefore the nodes feeding into ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import (
    InvalidProbabilityError,
    InvalidSizeError,
    LengthMismatchError,
    NodeIndexError,
    SelfLoopError,
)

__all__ = [
    "DirectedGraph",
    "DegreeStats",
    "from_edge_list",
    "erdos_renyi",
    "barabasi_albert",
    "degree_stats",
    "neighborhood_average",
    "overlap_pairs",
    "dependency_graph",
    "greedy_partition",
]


class DirectedGraph:
    """Immutable sparse directed graph on nodes 0..n-1.

    Edges are stored once, deduplicated, and sorted by (target, source).
    Both adjacency directions are kept in CSR-style index arrays so that
    in- and out-neighborhood queries are O(degree) and vectorized sweeps
    over all edges are O(|E|).

    Attributes
    ----------
    n : int
        Node count.
    targets, sources : int64 arrays of length |E|
        The edge list; ``sources[k]`` influences ``targets[k]``.
    """

    __slots__ = ("n", "targets", "sources", "_in_indptr", "_out_indptr",
                 "_out_indices", "_out_order")

    def __init__(self, n, targets, sources):
        targets = np.asarray(targets, dtype=np.int64)
        sources = np.asarray(sources, dtype=np.int64)
        if targets.shape != sources.shape or targets.ndim != 1:
            raise LengthMismatchError("targets and sources must be equal-length 1-d arrays")
        if targets.size:
            lo = min(targets.min(), sources.min())
            hi = max(targets.max(), sources.max())
            if lo < 0 or hi >= n:
                raise NodeIndexError(f"node id out of range [0, {n})")
            if (targets == sources).any():
                bad = int(targets[targets == sources][0])
                raise SelfLoopError(f"self-loop at node {bad}")
        # Dedup + canonical order via the flat edge code target*n + source.
        code = np.unique(targets * n + sources)
        self.n = int(n)
        self.targets = code // n
        self.sources = code % n
        self._in_indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self._in_indptr, self.targets + 1, 1)
        np.cumsum(self._in_indptr, out=self._in_indptr)
        # Out-adjacency is the transpose: re-sort edges by (source, target).
        self._out_order = np.argsort(self.sources * n + self.targets, kind="stable")
        self._out_indices = self.targets[self._out_order]
        self._out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self._out_indptr, self.sources + 1, 1)
        np.cumsum(self._out_indptr, out=self._out_indptr)

    @property
    def n_edges(self) -> int:
        return int(self.targets.size)

    @property
    def in_degrees(self) -> np.ndarray:
        return np.diff(self._in_indptr)

    @property
    def out_degrees(self) -> np.ndarray:
        return np.diff(self._out_indptr)

    def in_neighbors(self, i) -> np.ndarray:
        """Nodes j with an edge (i, j), i.e. the influencers of i."""
        return self.sources[self._in_indptr[i]:self._in_indptr[i + 1]]

    def out_neighbors(self, j) -> np.ndarray:
        """Nodes i with an edge (i, j), i.e. the nodes j influences."""
        return self._out_indices[self._out_indptr[j]:self._out_indptr[j + 1]]

    @property
    def edges(self) -> np.ndarray:
        """(|E|, 2) array of (target, source) rows in canonical order."""
        return np.column_stack([self.targets, self.sources])

    def in_adjacency(self) -> sparse.csr_matrix:
        """CSR matrix A with A[i, j] = 1 iff j is an in-neighbor of i."""
        data = np.ones(self.n_edges, dtype=np.float64)
        return sparse.csr_matrix(
            (data, self.sources, self._in_indptr), shape=(self.n, self.n)
        )

    def transpose(self) -> "DirectedGraph":
        """Graph with every edge reversed."""
        return DirectedGraph(self.n, self.sources, self.targets)

    def symmetrize(self) -> "DirectedGraph":
        """Graph with each edge stored in both directions (deduplicated)."""
        return DirectedGraph(
            self.n,
            np.concatenate([self.targets, self.sources]),
            np.concatenate([self.sources, self.targets]),
        )

    def relabel(self, perm) -> "DirectedGraph":
        """Apply a node permutation: new id of node i is perm[i]."""
        perm = np.asarray(perm, dtype=np.int64)
        if perm.shape != (self.n,):
            raise LengthMismatchError("perm must have length n")
        return DirectedGraph(self.n, perm[self.targets], perm[self.sources])

    def __eq__(self, other):
        return (
            isinstance(other, DirectedGraph)
            and self.n == other.n
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.sources, other.sources)
        )

    def __repr__(self):
        return f"DirectedGraph(n={self.n}, edges={self.n_edges})"


@dataclass(frozen=True)
class DegreeStats:
    """Degree summary of a directed graph.

    ``max_deg``/``avg_deg``/``median_deg`` are raw descriptive statistics
    (per-node degree is max(in, out); avg_deg is edges / n, which equals both
    the mean in-degree and the mean out-degree).  ``d_mx`` and ``d_av`` are
    the same quantities floored at 1, the form in which they enter rate
    diagnostics.
    """

    d_mx: int
    d_av: float
    max_deg: int
    avg_deg: float
    median_deg: float

    def to_dict(self):
        return {
            "d_mx": self.d_mx,
            "d_av": self.d_av,
            "max_deg": self.max_deg,
            "avg_deg": self.avg_deg,
            "median_deg": self.median_deg,
        }


def from_edge_list(edges, n) -> DirectedGraph:
    """Build a graph from (target, source) pairs; duplicates collapse.

    Parameters
    ----------
    edges : iterable of (int, int) pairs or (m, 2) array
    n : int
        Node count; all ids must lie in [0, n).
    """
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64)
    if arr.size == 0:
        return DirectedGraph(n, np.empty(0, np.int64), np.empty(0, np.int64))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise LengthMismatchError("edges must be (target, source) pairs")
    return DirectedGraph(n, arr[:, 0], arr[:, 1])


def erdos_renyi(n, lam, seed=None) -> DirectedGraph:
    """Directed Poisson random graph with expected in-degree ``lam``.

    Each ordered pair (i, j), i != j, carries an edge independently with
    probability lam / (n - 1).  Sampling draws, for each target node, a
    Binomial(n-1, p) count and then that many distinct sources, which is
    distributionally identical to the pairwise Bernoulli scheme.
    """
    if n < 2:
        raise InvalidSizeError("need n >= 2")
    p = lam / (n - 1)
    if not 0.0 <= p <= 1.0:
        raise InvalidProbabilityError(f"edge probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    counts = rng.binomial(n - 1, p, size=n)
    targets = np.repeat(np.arange(n, dtype=np.int64), counts)
    sources = np.empty(counts.sum(), dtype=np.int64)
    pos = 0
    for i in range(n):
        k = counts[i]
        if k == 0:
            continue
        srcs = rng.choice(n - 1, size=k, replace=False)
        srcs[srcs >= i] += 1  # skip the diagonal
        sources[pos:pos + k] = srcs
        pos += k
    return DirectedGraph(n, targets, sources)


def barabasi_albert(n, m, seed=None) -> DirectedGraph:
    """Preferential-attachment graph grown from a 20-node seed graph.

    The seed graph is a symmetrized Erdos-Renyi graph of size 20 with
    expected degree 1.  Each subsequent vertex attaches to ``m`` distinct
    existing vertices sampled proportionally to their current number of
    neighbors (vertices with no neighbors get weight 1 so they stay
    reachable), and every attachment is stored as an edge in both
    directions.
    """
    seed_size = 20
    if n <= seed_size:
        raise InvalidSizeError(f"need n > {seed_size}")
    if m < 1:
        raise InvalidSizeError("need m >= 1")
    rng = np.random.default_rng(seed)
    base = erdos_renyi(seed_size, 1.0, rng).symmetrize()
    targets = list(base.targets)
    sources = list(base.sources)
    # Symmetric storage keeps in-degree == out-degree == neighbor count.
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, base.targets, 1)
    for v in range(seed_size, n):
        w = np.maximum(deg[:v], 1).astype(np.float64)
        picks = rng.choice(v, size=min(m, v), replace=False, p=w / w.sum())
        for t in picks:
            targets.append(v)
            sources.append(t)
            targets.append(t)
            sources.append(v)
            deg[v] += 1
            deg[t] += 1
    return DirectedGraph(n, np.array(targets), np.array(sources))


def degree_stats(g: DirectedGraph) -> DegreeStats:
    """Degree summary; see :class:`DegreeStats` for the conventions."""
    per_node = np.maximum(g.in_degrees, g.out_degrees)
    max_deg = int(per_node.max()) if g.n else 0
    avg_deg = g.n_edges / g.n if g.n else 0.0
    median_deg = float(np.median(per_node)) if g.n else 0.0
    return DegreeStats(
        d_mx=max(1, max_deg),
        d_av=max(1.0, avg_deg),
        max_deg=max_deg,
        avg_deg=avg_deg,
        median_deg=median_deg,
    )


def neighborhood_average(g: DirectedGraph, y) -> np.ndarray:
    """Mean of ``y`` over each node's in-neighborhood (0 for isolated nodes)."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (g.n,):
        raise LengthMismatchError(f"y must have length {g.n}")
    totals = np.bincount(g.targets, weights=y[g.sources], minlength=g.n)
    return totals / np.maximum(g.in_degrees, 1)


def overlap_pairs(g: DirectedGraph) -> np.ndarray:
    """All unordered node pairs whose closed in-neighborhoods intersect.

    Returns an (m, 2) array of pairs (i1, i2) with i1 <= i2, including every
    diagonal pair (i, i).  A node k belongs to the closed in-neighborhood of
    exactly the nodes R(k) = {k} union out-neighbors(k), so emitting all
    pairs within each R(k) and deduplicating yields the exact set.  Cost is
    sum_k |R(k)|^2, fine for sparse graphs; dense graphs are out of scope.
    """
    n = g.n
    chunks = []
    for k in range(n):
        r = np.append(g.out_neighbors(k), k)
        r.sort()
        i1, i2 = np.triu_indices(r.size)
        chunks.append(r[i1] * n + r[i2])
    codes = np.unique(np.concatenate(chunks)) if chunks else np.empty(0, np.int64)
    return np.column_stack([codes // n, codes % n])


def dependency_graph(g: DirectedGraph) -> DirectedGraph:
    """Undirected graph joining distinct nodes with overlapping closed
    in-neighborhoods (the cross-sectional dependency structure of the
    per-node estimator contributions)."""
    pairs = overlap_pairs(g)
    off = pairs[pairs[:, 0] != pairs[:, 1]]
    return from_edge_list(off, g.n).symmetrize()


def greedy_partition(g_star: DirectedGraph) -> list[np.ndarray]:
    """Partition nodes of an undirected graph into independent classes.

    Greedy coloring in node order: each node takes the smallest class index
    unused by its neighbors (union of in- and out-neighbors, which coincide
    for symmetric input).  No two adjacent nodes share a class, and the
    class count is at most 1 + max degree.
    """
    n = g_star.n
    color = np.full(n, -1, dtype=np.int64)
    max_deg = int(np.maximum(g_star.in_degrees, g_star.out_degrees).max()) if n else 0
    scratch = np.zeros(max_deg + 2, dtype=bool)
    for i in range(n):
        neigh = np.concatenate([g_star.in_neighbors(i), g_star.out_neighbors(i)])
        used = color[neigh]
        used = used[used >= 0]
        scratch[:] = False
        scratch[used[used < scratch.size]] = True
        color[i] = int(np.argmin(scratch))
    return [np.flatnonzero(color == c) for c in range(color.max() + 1)] if n else []
