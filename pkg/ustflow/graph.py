"""Weighted graph metric space and rooted shortest-path trees.

Nodes are integer indices ``0..node_count-1``. Edges keep their input order so an
edge-id is simply its position in the edge list.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sparse
from scipy.sparse import csgraph

from .errors import (
    DisconnectedGraph,
    DuplicateEdge,
    InvalidGraph,
    NodeOutOfRange,
    NonPositiveWeight,
    NonUniqueShortestPath,
    SelfLoop,
)

logger = logging.getLogger(__name__)

DEFAULT_TIE_TOL = 1e-9

__all__ = [
    "PhysicalGraph",
    "RootedPreprocess",
    "UniquenessReport",
    "build_graph",
    "shortest_path_tree",
    "graph_distance",
    "validate_root",
    "distances_from",
    "perturb_weights",
]


@dataclass(frozen=True, eq=False)
class PhysicalGraph:
    """Undirected, connected graph with positive edge lengths.

    Attributes:
        node_count: Number of nodes.
        endpoints: ``(E, 2)`` int array of edge endpoints, in input order.
        weights: ``(E,)`` float array of edge lengths.
    """

    node_count: int
    endpoints: np.ndarray
    weights: np.ndarray

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [
            (int(u), int(v), float(w))
            for (u, v), w in zip(self.endpoints, self.weights)
        ]

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric sparse matrix of edge lengths, as scipy's csgraph expects."""
        u, v = self.endpoints[:, 0], self.endpoints[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.concatenate([self.weights, self.weights])
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.node_count,) * 2)

    @cached_property
    def _incidence(self) -> tuple[np.ndarray, np.ndarray]:
        ends = self.endpoints.ravel()
        edge_ids = np.repeat(np.arange(self.edge_count), 2)
        order = np.argsort(ends, kind="stable")
        counts = np.bincount(ends, minlength=self.node_count)
        ptr = np.concatenate([[0], np.cumsum(counts)])
        return ptr, edge_ids[order]

    def incident_edges(self, v: int) -> np.ndarray:
        """Edge-ids touching node ``v``, ascending."""
        _check_node(self, v)
        ptr, ids = self._incidence
        return ids[ptr[v]:ptr[v + 1]]

    def total_length(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class UniquenessReport:
    root: int
    ok: bool
    tied_nodes: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class RootedPreprocess:
    """Shortest-path tree of a graph seen from one root node.

    ``tree_edges[i]`` is the parent edge of ``tree_children[i]``; both arrays run from
    the leaves towards the root, so every edge comes after all edges below it.
    """

    graph: PhysicalGraph
    root: int
    dist: np.ndarray
    parent: np.ndarray
    parent_edge: np.ndarray
    tree_edges: np.ndarray
    tree_children: np.ndarray
    dropped_edges: np.ndarray
    uniqueness: UniquenessReport
    levels: tuple[np.ndarray, ...] = field(repr=False, default=())
    depth: np.ndarray = field(repr=False, default=None)

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def uniqueness_ok(self) -> bool:
        return self.uniqueness.ok

    def fold_subtree_masses(self, node_mass: np.ndarray) -> np.ndarray:
        """Return, per node, the total of ``node_mass`` over the node's subtree.

        ``node_mass`` is left untouched.
        """
        sub = np.array(node_mass, dtype=np.float64, copy=True)
        parent = self.parent
        for nodes in self.levels:
            np.add.at(sub, parent[nodes], sub[nodes])
        return sub

    def path_closure(self, nodes) -> np.ndarray:
        """Sorted non-root nodes lying on the tree paths from ``nodes`` to the root.

        Each returned node stands for its parent edge. Cost is proportional to the
        number of nodes returned, not to the graph size.
        """
        parent, root = self.parent, self.root
        seen = set()
        found = []
        frontier = np.unique(np.asarray(nodes, dtype=np.int64))
        frontier = frontier[frontier != root]
        while frontier.size:
            found.append(frontier)
            seen.update(frontier.tolist())
            up = np.unique(parent[frontier])
            up = up[up != root]
            frontier = np.array([u for u in up.tolist() if u not in seen], dtype=np.int64)
        if not found:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(found))

    def fold_on(self, closure: np.ndarray, nodes: np.ndarray, masses: np.ndarray) -> np.ndarray:
        """Subtree masses restricted to ``closure``, a path closure covering ``nodes``."""
        sub = np.zeros(len(closure))
        keep = nodes != self.root
        np.add.at(sub, np.searchsorted(closure, nodes[keep]), masses[keep])
        if not len(closure):
            return sub
        parent = self.parent[closure]
        has_parent = parent != self.root
        parent_pos = np.searchsorted(closure, parent)
        for group in _depth_groups(np.arange(len(closure)), self.depth[closure]):
            group = group[has_parent[group]]
            np.add.at(sub, parent_pos[group], sub[group])
        return sub


def _check_node(g: PhysicalGraph, v) -> int:
    if not (0 <= int(v) < g.node_count):
        raise NodeOutOfRange(f"node {v} is outside 0..{g.node_count - 1}")
    return int(v)


def build_graph(node_count: int, edges: Iterable[Sequence]) -> PhysicalGraph:
    """Validate an edge list and return the graph.

    Raises:
        InvalidGraph: ``node_count < 1`` or malformed edge records.
        NodeOutOfRange: an endpoint is not a node.
        NonPositiveWeight, SelfLoop, DuplicateEdge, DisconnectedGraph.
    """
    node_count = int(node_count)
    if node_count < 1:
        raise InvalidGraph(f"node_count must be >= 1, got {node_count}")

    records = edges if isinstance(edges, np.ndarray) else list(edges)
    if len(records):
        try:
            arr = np.asarray(records, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise InvalidGraph(f"edges must be (u, v, length) triples: {exc}") from exc
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InvalidGraph("edges must be (u, v, length) triples")
    else:
        arr = np.zeros((0, 3), dtype=np.float64)

    ends_f = arr[:, :2]
    if not np.all(ends_f == np.floor(ends_f)):
        raise InvalidGraph("edge endpoints must be integers")
    endpoints = ends_f.astype(np.int64)
    weights = arr[:, 2].copy()

    bad = np.flatnonzero((endpoints < 0).any(axis=1) | (endpoints >= node_count).any(axis=1))
    if bad.size:
        u, v = endpoints[bad[0]]
        raise NodeOutOfRange(f"edge {bad[0]} ({u}, {v}) has an endpoint outside 0..{node_count - 1}")

    bad = np.flatnonzero(~(np.isfinite(weights) & (weights > 0)))
    if bad.size:
        raise NonPositiveWeight(f"edge {bad[0]} has length {weights[bad[0]]!r}; lengths must be > 0")

    loops = np.flatnonzero(endpoints[:, 0] == endpoints[:, 1])
    if loops.size:
        raise SelfLoop(f"edge {loops[0]} is a self-loop on node {endpoints[loops[0], 0]}")

    lo = endpoints.min(axis=1)
    hi = endpoints.max(axis=1)
    keys = lo * node_count + hi
    _, first, counts = np.unique(keys, return_index=True, return_counts=True)
    if (counts > 1).any():
        dup_key = keys[first[np.argmax(counts > 1)]]
        later = np.flatnonzero(keys == dup_key)
        raise DuplicateEdge(
            f"edges {later.tolist()} all join nodes {dup_key // node_count} and {dup_key % node_count}"
        )

    g = PhysicalGraph(node_count=node_count, endpoints=endpoints, weights=weights)
    if node_count > 1:
        n_components, _ = csgraph.connected_components(g.adjacency, directed=False)
        if n_components != 1:
            raise DisconnectedGraph(f"graph has {n_components} connected components")
    return g


def _root_distances(g: PhysicalGraph, root: int) -> np.ndarray:
    return csgraph.dijkstra(g.adjacency, directed=False, indices=root)


def _candidate_parents(g: PhysicalGraph, dist: np.ndarray, tie_tol: float):
    """Directed edge uses that realise a shortest distance, as (child, edge-id) arrays."""
    u, v = g.endpoints[:, 0], g.endpoints[:, 1]
    eid = np.arange(g.edge_count)
    tails = np.concatenate([u, v])
    heads = np.concatenate([v, u])
    ids = np.concatenate([eid, eid])
    w = np.concatenate([g.weights, g.weights])
    through = dist[tails] + w
    mask = (dist[tails] < dist[heads]) & (np.abs(through - dist[heads]) <= tie_tol)
    return heads[mask], ids[mask]


def _tied_nodes(g: PhysicalGraph, heads: np.ndarray) -> np.ndarray:
    counts = np.bincount(heads, minlength=g.node_count)
    return np.flatnonzero(counts > 1)


def validate_root(g: PhysicalGraph, root: int, tie_tol: float = DEFAULT_TIE_TOL) -> UniquenessReport:
    """Check whether every node has a single shortest-path predecessor from ``root``."""
    root = _check_node(g, root)
    dist = _root_distances(g, root)
    heads, _ = _candidate_parents(g, dist, tie_tol)
    tied = _tied_nodes(g, heads)
    return UniquenessReport(root=root, ok=tied.size == 0, tied_nodes=tuple(int(t) for t in tied))


def _hop_levels(parent: np.ndarray, root: int):
    """Hop depth of every node, and non-root nodes grouped by depth, deepest group first."""
    n = len(parent)
    nxt = np.where(parent >= 0, parent, root)
    depth = (parent >= 0).astype(np.int64)
    # pointer jumping: depth[v] accumulates hops until every pointer reaches the root
    while np.any(nxt != root):
        depth = depth + np.where(nxt != root, depth[nxt], 0)
        nxt = nxt[nxt]
    if n <= 1:
        return (), depth
    nodes = np.flatnonzero(parent >= 0)
    return _depth_groups(nodes, depth), depth


def _depth_groups(nodes: np.ndarray, depth: np.ndarray) -> tuple[np.ndarray, ...]:
    order = nodes[np.argsort(-depth[nodes], kind="stable")]
    cuts = np.flatnonzero(np.diff(depth[order])) + 1
    return tuple(np.split(order, cuts))


def shortest_path_tree(
    g: PhysicalGraph,
    root: int,
    tie_tol: float = DEFAULT_TIE_TOL,
    allow_ties: bool = False,
) -> RootedPreprocess:
    """Run Dijkstra from ``root`` and build the shortest-path tree.

    A node whose shortest distance is realised (within ``tie_tol``) through more than
    one edge is a tie. Ties raise NonUniqueShortestPath unless ``allow_ties`` is set,
    in which case the predecessor edge with the smallest id is kept.
    """
    root = _check_node(g, root)
    if tie_tol < 0:
        raise ValueError("tie_tol must be >= 0")
    n = g.node_count
    dist = _root_distances(g, root)

    heads, ids = _candidate_parents(g, dist, tie_tol)
    tied = _tied_nodes(g, heads)
    if tied.size and not allow_ties:
        raise NonUniqueShortestPath(root, tied)
    if tied.size:
        logger.warning("root %d: %d tied nodes resolved by smallest edge-id", root, tied.size)

    parent_edge = np.full(n, g.edge_count, dtype=np.int64)
    np.minimum.at(parent_edge, heads, ids)
    parent_edge[root] = -1
    missing = np.flatnonzero(parent_edge == g.edge_count)
    if missing.size:
        raise DisconnectedGraph(f"nodes {missing[:10].tolist()} are unreachable from root {root}")

    parent = np.full(n, -1, dtype=np.int64)
    non_root = np.flatnonzero(parent_edge >= 0)
    pe = parent_edge[non_root]
    a, b = g.endpoints[pe, 0], g.endpoints[pe, 1]
    parent[non_root] = np.where(a == non_root, b, a)

    # leaf-to-root: larger distance first, node id breaks equal distances
    children = non_root[np.lexsort((non_root, -dist[non_root]))]
    tree_edges = parent_edge[children]
    in_tree = np.zeros(g.edge_count, dtype=bool)
    in_tree[tree_edges] = True
    dropped = np.flatnonzero(~in_tree)

    levels, depth = _hop_levels(parent, root)
    logger.debug(
        "root %d: %d tree edges, %d dropped edges", root, len(tree_edges), len(dropped)
    )
    return RootedPreprocess(
        graph=g,
        root=root,
        dist=dist,
        parent=parent,
        parent_edge=parent_edge,
        tree_edges=tree_edges,
        tree_children=children,
        dropped_edges=dropped,
        uniqueness=UniquenessReport(root, tied.size == 0, tuple(int(t) for t in tied)),
        levels=levels,
        depth=depth,
    )


def graph_distance(pre: RootedPreprocess, v: int) -> float:
    """d_G(root, v)."""
    v = _check_node(pre.graph, v)
    return float(pre.dist[v])


def distances_from(g: PhysicalGraph, sources: Sequence[int]) -> np.ndarray:
    """Rows of shortest distances, one per source node."""
    src = np.asarray(sources, dtype=np.int64).reshape(-1)
    for s in src:
        _check_node(g, s)
    if src.size == 0:
        return np.zeros((0, g.node_count))
    return np.atleast_2d(csgraph.dijkstra(g.adjacency, directed=False, indices=src))


def perturb_weights(g: PhysicalGraph, eps: float, seed=None) -> PhysicalGraph:
    """Add ``eps * U[0, 1)`` to every edge length.

    Grids and other symmetric graphs have no unique-path root; a tiny perturbation
    breaks the ties almost surely.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    rng = np.random.default_rng(seed)
    weights = g.weights + eps * rng.random(g.edge_count)
    return PhysicalGraph(node_count=g.node_count, endpoints=g.endpoints.copy(), weights=weights)
