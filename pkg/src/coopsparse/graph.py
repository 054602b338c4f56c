"""Communication topology for the sensor network.

Nodes are indexed ``0..n-1`` inside the library. Self-loops are implicit:
every node is its own neighbor and must not appear in the edge list.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


class GraphError(ValueError):
    """Invalid edge list or adjacency matrix."""


def _normalize_edges(edges: Iterable[Iterable[int]], n: int) -> frozenset[tuple[int, int]]:
    seen: set[tuple[int, int]] = set()
    for edge in edges:
        pair = tuple(int(v) for v in edge)
        if len(pair) != 2:
            raise GraphError(f"edge {edge!r} must have exactly two endpoints")
        a, b = pair
        if not (0 <= a < n and 0 <= b < n):
            raise GraphError(f"edge {edge!r} references a node outside 0..{n - 1}")
        if a == b:
            raise GraphError(f"edge {edge!r} is a self-loop; self-loops are implicit")
        key = (min(a, b), max(a, b))
        if key in seen:
            raise GraphError(f"duplicate edge {edge!r}")
        seen.add(key)
    return frozenset(seen)


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected graph with a symmetric stochastic weight matrix.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : frozenset of (int, int)
        Unordered node pairs, stored as ``(min, max)``.
    adjacency : ndarray, shape (n, n)
        Weight matrix; row ``i`` holds the weights node ``i`` applies to its
        neighbors (itself included).
    """

    n: int
    edges: frozenset
    adjacency: np.ndarray
    _powers: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=float)
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        validate_adjacency(A, self.edges, self.n)

    @classmethod
    def from_adjacency(cls, adjacency, edges=None) -> "NetworkGraph":
        """Wrap an explicit weight matrix, inferring edges from its support
        when ``edges`` is not given."""
        A = np.asarray(adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {A.shape}")
        n = A.shape[0]
        if edges is None:
            edges = [(i, j) for i in range(n) for j in range(i + 1, n) if A[i, j] != 0 or A[j, i] != 0]
        return cls(n=n, edges=_normalize_edges(edges, n), adjacency=A)

    def neighbors(self, i: int) -> list[int]:
        """Neighbor set of ``i``, including ``i`` itself, in ascending order."""
        out = {i}
        for a, b in self.edges:
            if a == i:
                out.add(b)
            elif b == i:
                out.add(a)
        return sorted(out)

    def degree(self, i: int) -> int:
        """Self-inclusive degree, i.e. ``len(neighbors(i))``."""
        return len(self.neighbors(i))


def validate_adjacency(A: np.ndarray, edges: frozenset, n: int) -> None:
    if A.shape != (n, n):
        raise GraphError(f"adjacency shape {A.shape} does not match n={n}")
    if not np.all(np.isfinite(A)):
        raise GraphError("adjacency has non-finite entries")
    if np.any(A < 0):
        raise GraphError("adjacency has negative entries")
    if not np.array_equal(A, A.T):
        raise GraphError("adjacency is not symmetric")
    rows = A.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > 1e-12:
        raise GraphError(f"adjacency rows must sum to 1 (worst row sum {rows[np.argmax(np.abs(rows - 1))]!r})")
    allowed = np.eye(n, dtype=bool)
    for a, b in edges:
        allowed[a, b] = allowed[b, a] = True
    if np.any(A[~allowed] != 0):
        raise GraphError("adjacency has weight on a pair that is not an edge")


def metropolis_weights(edges: Iterable[Iterable[int]], n: int) -> NetworkGraph:
    """Build the Metropolis weight matrix for an undirected edge list.

    Off-diagonal weights are ``1 / max(n_i, n_l)`` where ``n_i`` counts node
    ``i``'s neighbors *including itself*; the diagonal takes the remaining
    mass of each row.

    Examples
    --------
    >>> metropolis_weights([(0, 1)], 2).adjacency
    array([[0.5, 0.5],
           [0.5, 0.5]])
    """
    if n < 1:
        raise GraphError(f"n must be >= 1, got {n}")
    E = _normalize_edges(edges, n)
    deg = np.ones(n, dtype=int)
    for a, b in E:
        deg[a] += 1
        deg[b] += 1
    A = np.zeros((n, n))
    for a, b in E:
        A[a, b] = A[b, a] = 1.0 / max(deg[a], deg[b])
    # diagonal is set last so each row sums to one up to a single rounding
    A[np.diag_indices(n)] = 1.0 - A.sum(axis=1)
    return NetworkGraph(n=n, edges=E, adjacency=A)


def ring_graph(n: int) -> NetworkGraph:
    """Metropolis-weighted cycle on ``n`` nodes (a path for n = 2)."""
    if n == 1:
        return metropolis_weights([], 1)
    if n == 2:
        return metropolis_weights([(0, 1)], 2)
    return metropolis_weights([(i, (i + 1) % n) for i in range(n)], n)


def _bfs(g: NetworkGraph, source: int) -> list[int]:
    adj = [[] for _ in range(g.n)]
    for a, b in sorted(g.edges):
        adj[a].append(b)
        adj[b].append(a)
    dist = [-1] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def is_connected(g: NetworkGraph) -> bool:
    return min(_bfs(g, 0)) >= 0


def diameter(g: NetworkGraph) -> int:
    """Longest shortest-path length; 0 for a single node.

    Raises
    ------
    GraphError
        If the graph is disconnected.
    """
    best = 0
    for s in range(g.n):
        dist = _bfs(g, s)
        if min(dist) < 0:
            raise GraphError("diameter is undefined for a disconnected graph")
        best = max(best, max(dist))
    return best


def adjacency_power(g: NetworkGraph, l: int) -> np.ndarray:
    """Return the ``l``-th matrix power of the weight matrix.

    Powers are cached on the graph and extended by repeated multiplication
    from the highest cached power.
    """
    if l < 0:
        raise ValueError(f"power must be >= 0, got {l}")
    cache = g._powers
    if not cache:
        cache[0] = np.eye(g.n)
    top = max(cache)
    while top < l:
        cache[top + 1] = cache[top] @ g.adjacency
        top += 1
    return cache[l].copy()
