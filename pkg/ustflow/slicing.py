"""Distances averaged over several root nodes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csgraph, csr_matrix

from .errors import InvalidParams, NoValidRoot
from .graph import DEFAULT_TIE_TOL, PhysicalGraph, RootedPreprocess, shortest_path_tree, validate_root
from .measure import DiscreteMeasure
from .ust import UstParams, pairwise_matrix, ust_distance

logger = logging.getLogger(__name__)

DEFAULT_SLICES = 10

__all__ = [
    "RootSet",
    "SlicedUst",
    "sample_roots",
    "sliced_ust",
    "sliced_pairwise_matrix",
    "sample_spanning_tree",
    "tree_ept_distance",
    "sliced_tree_ept",
]


@dataclass(frozen=True)
class RootSet:
    roots: tuple[int, ...]
    seed: int
    complete: bool = True
    allow_ties: bool = False

    def __len__(self):
        return len(self.roots)


def sample_roots(
    g: PhysicalGraph,
    k: Optional[int] = None,
    seed: int = 0,
    tie_tol: float = DEFAULT_TIE_TOL,
    allow_ties: bool = False,
) -> RootSet:
    """Draw ``k`` distinct unique-path roots uniformly, reproducibly for a given seed.

    ``k`` defaults to ``DEFAULT_SLICES``, capped at the node count.

    Nodes are visited in a seeded random order and kept while they pass
    :func:`validate_root`, so large graphs only pay for the roots they test. With
    ``allow_ties`` every node qualifies. When fewer than ``k`` nodes qualify all of
    them are returned and ``complete`` is False.
    """
    if k is None:
        k = min(DEFAULT_SLICES, g.node_count)
    if not 1 <= k <= g.node_count:
        raise InvalidParams(f"slice count must be in 1..{g.node_count}, got {k}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(g.node_count)
    if allow_ties:
        return RootSet(tuple(int(v) for v in order[:k]), seed, True, True)

    roots = []
    for v in order:
        if validate_root(g, int(v), tie_tol).ok:
            roots.append(int(v))
            if len(roots) == k:
                break
    if not roots:
        raise NoValidRoot("no node of the graph has unique shortest paths to every other node")
    complete = len(roots) == k
    if not complete:
        logger.warning("only %d of %d requested roots have unique shortest paths", len(roots), k)
    return RootSet(tuple(roots), seed, complete, False)


@dataclass
class SlicedUst:
    """A graph with one cached shortest-path tree per root."""

    graph: PhysicalGraph
    roots: RootSet
    tie_tol: float = DEFAULT_TIE_TOL
    _trees: dict = field(default_factory=dict, repr=False)

    def tree(self, root: int) -> RootedPreprocess:
        pre = self._trees.get(root)
        if pre is None:
            pre = shortest_path_tree(self.graph, root, self.tie_tol, self.roots.allow_ties)
            self._trees[root] = pre
        return pre

    def trees(self) -> list[RootedPreprocess]:
        return [self.tree(r) for r in self.roots.roots]

    def distance(self, params: UstParams, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
        vals = [ust_distance(pre, params, mu, nu) for pre in self.trees()]
        return float(np.mean(vals))

    def pairwise_matrix(self, params: UstParams, ms: Sequence[DiscreteMeasure]) -> np.ndarray:
        total = None
        for pre in self.trees():
            mat = pairwise_matrix(pre, params, ms)
            total = mat if total is None else total + mat
        return total / len(self.roots)


def sliced_ust(
    g: PhysicalGraph,
    roots: RootSet,
    params: UstParams,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
) -> float:
    return SlicedUst(g, roots).distance(params, mu, nu)


def sliced_pairwise_matrix(
    g: PhysicalGraph,
    roots: RootSet,
    params: UstParams,
    ms: Sequence[DiscreteMeasure],
) -> np.ndarray:
    return SlicedUst(g, roots).pairwise_matrix(params, ms)


# --- tree baseline: entropy partial transport on sampled spanning trees ---

def sample_spanning_tree(g: PhysicalGraph, seed) -> PhysicalGraph:
    """Random spanning tree of ``g`` keeping the original edge lengths.

    The tree is the minimum spanning tree under randomly rescaled lengths, so each
    seed gives a different tree while shorter edges stay more likely.
    """
    rng = np.random.default_rng(seed)
    u, v = g.endpoints[:, 0], g.endpoints[:, 1]
    noisy = g.weights * rng.uniform(0.5, 1.5, g.edge_count)
    # MST input values are the ranks of the noisy lengths, which map straight back to edge-ids
    order = np.argsort(noisy, kind="stable")
    rank = np.empty(g.edge_count)
    rank[order] = np.arange(1, g.edge_count + 1)
    mst = csgraph.minimum_spanning_tree(csr_matrix((rank, (u, v)), shape=(g.node_count,) * 2)).tocoo()
    picked = np.sort(order[mst.data.astype(np.int64) - 1]) if mst.nnz else np.zeros(0, dtype=np.int64)
    return PhysicalGraph(
        node_count=g.node_count,
        endpoints=g.endpoints[picked].copy(),
        weights=g.weights[picked].copy(),
    )


def tree_ept_distance(
    tree: PhysicalGraph,
    params: UstParams,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    root: int = 0,
) -> float:
    """Entropy partial transport on a tree.

    On a tree every root has unique paths and the closed form with ``p = 1`` and the
    length measure is exactly the tree transport distance.
    """
    tree_params = params.model_copy(update={"p": 1.0, "omega": None})
    return ust_distance(shortest_path_tree(tree, root), tree_params, mu, nu)


def sliced_tree_ept(
    g: PhysicalGraph,
    params: UstParams,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    slices: int = DEFAULT_SLICES,
    seed: int = 0,
) -> float:
    """Mean tree distance over ``slices`` random spanning trees of ``g``."""
    rng = np.random.default_rng(seed)
    vals = []
    for tree_seed in rng.integers(0, 2**32, size=slices):
        tree = sample_spanning_tree(g, int(tree_seed))
        root = int(rng.integers(g.node_count))
        vals.append(tree_ept_distance(tree, params, mu, nu, root))
    return float(np.mean(vals))
