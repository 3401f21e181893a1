"""Undirected simple graphs: ingestion, k-core extraction, descriptive statistics.

Nodes are dense integer ids assigned in first-seen file order; ``original_ids``
maps each internal id back to the source-file token so feature and label tables
can be joined after any amount of pruning.
"""

import json
import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property

from .errors import InputError
from .validation import check_node_index

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph.

    Attributes:
        node_count: number of nodes n; ids are 0..n-1.
        edges: frozenset of (u, v) tuples with u < v — one entry per
            undirected edge, no self-loops.
        original_ids: tuple mapping internal id -> source-file id.
    """

    node_count: int
    edges: frozenset
    original_ids: tuple

    def __post_init__(self):
        if len(self.original_ids) != self.node_count:
            raise InputError(
                f"id map covers {len(self.original_ids)} nodes, "
                f"expected {self.node_count}"
            )
        for u, v in self.edges:
            if u == v:
                raise InputError(f"self-loop on node {u}")
            if not (0 <= u < v < self.node_count):
                raise InputError(f"edge ({u}, {v}) out of range or unordered")

    @property
    def edge_count(self):
        return len(self.edges)

    @cached_property
    def adjacency(self):
        """Tuple of frozensets; entry v holds the neighbors of v."""
        neigh = [set() for _ in range(self.node_count)]
        for u, v in self.edges:
            neigh[u].add(v)
            neigh[v].add(u)
        return tuple(frozenset(s) for s in neigh)

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in self.edges


@dataclass(frozen=True)
class StatsRecord:
    """Descriptive network statistics.

    Conventions: density = m / (n(n-1)) (undirected edge count over ordered
    pairs), avg_degree = 2m / n, transitivity = 3·triangles / connected triples.
    """

    nodes: int
    edges: int
    density: float
    transitivity: float
    components: int
    max_degree: int
    avg_degree: float

    def as_dict(self):
        return {
            "nodes": self.nodes,
            "edges": self.edges,
            "density": self.density,
            "transitivity": self.transitivity,
            "components": self.components,
            "max_degree": self.max_degree,
            "avg_degree": self.avg_degree,
        }

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"


def load_edge_list(path, symmetrize=True):
    """Read a whitespace-separated edge list into a :class:`Graph`.

    File format: UTF-8 text, one edge per line as two whitespace-separated node
    ids; lines starting with ``#`` are ignored. Duplicate lines are
    deduplicated and self-loops dropped (count logged).

    Args:
        path: edge-list file path.
        symmetrize: when true, treat input as directed and collapse both
            orientations onto one undirected edge. When false, the input must
            already be undirected: a line repeating an earlier edge in reverse
            is a parse error.
    Returns:
        Graph with contiguous internal ids in first-seen order.
    Raises:
        InputError: on malformed lines, reversed duplicates (symmetrize off),
            or an empty graph after cleaning.
    """
    ids = {}
    order = []
    edges = set()
    seen_directed = set()
    self_loops = 0

    def intern(token):
        if token not in ids:
            ids[token] = len(order)
            order.append(token)
        return ids[token]

    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                parts = stripped.split()
                if len(parts) != 2:
                    raise InputError(
                        f"{path}:{lineno}: expected two node ids, "
                        f"got {len(parts)} tokens"
                    )
                u, v = intern(parts[0]), intern(parts[1])
                if u == v:
                    self_loops += 1
                    continue
                key = (min(u, v), max(u, v))
                if not symmetrize and key in edges and (u, v) not in seen_directed:
                    raise InputError(
                        f"{path}:{lineno}: edge appears in both orientations "
                        "but symmetrize is off"
                    )
                seen_directed.add((u, v))
                edges.add(key)
    except OSError as exc:
        raise InputError(f"cannot read edge list {path}: {exc}") from exc

    if self_loops:
        logger.info("dropped %d self-loop line(s) from %s", self_loops, path)
    if not order or not edges:
        raise InputError(f"{path}: empty graph after cleaning")
    return Graph(len(order), frozenset(edges), tuple(order))


def write_edge_list(g, path):
    """Write one ``u v`` line per edge using original ids; round-trips
    through :func:`load_edge_list`."""
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in sorted(g.edges):
            fh.write(f"{g.original_ids[u]} {g.original_ids[v]}\n")


def degree(g, v):
    """Number of distinct neighbors of v."""
    check_node_index(v, g.node_count)
    return len(g.adjacency[v])


def induced_subgraph(g, keep):
    """Subgraph induced on ``keep`` (iterable of node ids).

    Returns:
        (subgraph, id_map) where id_map maps new id -> old id. Node order
        follows ascending old id.
    """
    keep = sorted(set(keep))
    for v in keep:
        check_node_index(v, g.node_count)
    old_to_new = {old: new for new, old in enumerate(keep)}
    edges = frozenset(
        (old_to_new[u], old_to_new[v])
        for u, v in g.edges
        if u in old_to_new and v in old_to_new
    )
    sub = Graph(len(keep), edges, tuple(g.original_ids[v] for v in keep))
    return sub, {new: old for old, new in old_to_new.items()}


def k_core(g, k):
    """Maximal induced subgraph in which every vertex has degree ≥ k.

    All components satisfying the bound are kept (their union). The result may
    be empty (a Graph with zero nodes).

    Args:
        g: input graph.
        k: minimum degree bound, ≥ 0.
    Returns:
        (core, id_map) with id_map mapping new id -> old id.
    """
    if k < 0:
        raise InputError(f"k must be non-negative, got {k}")
    deg = [len(g.adjacency[v]) for v in range(g.node_count)]
    alive = [True] * g.node_count
    queue = deque(v for v in range(g.node_count) if deg[v] < k)
    while queue:
        v = queue.popleft()
        if not alive[v]:
            continue
        alive[v] = False
        for w in g.adjacency[v]:
            if alive[w]:
                deg[w] -= 1
                if deg[w] < k:
                    queue.append(w)
    keep = [v for v in range(g.node_count) if alive[v]]
    if not keep:
        return Graph(0, frozenset(), ()), {}
    return induced_subgraph(g, keep)


def connected_components(g):
    """Number of connected components (isolated nodes count as components)."""
    seen = [False] * g.node_count
    count = 0
    for start in range(g.node_count):
        if seen[start]:
            continue
        count += 1
        queue = deque([start])
        seen[start] = True
        while queue:
            v = queue.popleft()
            for w in g.adjacency[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
    return count


def network_stats(g):
    """Compute the :class:`StatsRecord` for a graph with n ≥ 1.

    Transitivity is the global clustering coefficient
    3·(triangles) / (connected triples); defined as 0 when no triples exist
    (including n = 1).
    """
    n = g.node_count
    if n < 1:
        raise InputError("statistics need at least one node")
    m = g.edge_count
    density = m / (n * (n - 1)) if n > 1 else 0.0
    degrees = [len(g.adjacency[v]) for v in range(n)]
    triples = sum(d * (d - 1) // 2 for d in degrees)
    closed = sum(len(g.adjacency[u] & g.adjacency[v]) for u, v in g.edges)
    transitivity = closed / triples if triples else 0.0
    return StatsRecord(
        nodes=n,
        edges=m,
        density=density,
        transitivity=transitivity,
        components=connected_components(g),
        max_degree=max(degrees) if degrees else 0,
        avg_degree=2.0 * m / n,
    )
