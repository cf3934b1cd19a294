"""Synthetic benchmark graphs over point clouds.

Points are first reduced to ``M`` centroids by farthest-point clustering, then
``M ln M`` (``log``) or ``M^1.5`` (``sqrt``) random centroid pairs become edges
weighted by Euclidean distance. Extra edges join the pieces into one component.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix, csgraph
from scipy.spatial.distance import cdist

from .errors import DegenerateCentroids, EmptyCloud, InvalidParams, PointsFormatError, SingleNode
from .graph import PhysicalGraph, build_graph

logger = logging.getLogger(__name__)

DENSITIES = ("log", "sqrt")
# above this many candidate pairs, edges are drawn by rejection instead of a full shuffle
_SHUFFLE_LIMIT = 2_000_000

__all__ = [
    "PointCloud",
    "farthest_point_clustering",
    "target_edge_count",
    "build_random_graph",
    "build_graph_from_points",
]


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise PointsFormatError(f"points must be a 2-d array, got {pts.ndim} dimensions")
        if not np.isfinite(pts).all():
            raise PointsFormatError("points must have finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)


def farthest_point_clustering(
    pc: PointCloud,
    M: int,
    seed=None,
    start: Optional[int] = None,
) -> tuple[PointCloud, np.ndarray]:
    """Greedy k-center: returns the centers (input points) and each point's cluster.

    The first center is ``start`` or a seeded random point. Selection stops early once
    every distinct point is a center.
    """
    if len(pc) == 0:
        raise EmptyCloud("point cloud is empty")
    if M < 1:
        raise InvalidParams(f"cluster count must be >= 1, got {M}")
    pts = pc.points
    if start is None:
        start = int(np.random.default_rng(seed).integers(len(pts)))

    centers = [start]
    nearest = cdist(pts, pts[[start]]).ravel()
    while len(centers) < M:
        far = int(np.argmax(nearest))
        if nearest[far] == 0:
            break
        centers.append(far)
        nearest = np.minimum(nearest, cdist(pts, pts[[far]]).ravel())

    assignment = np.argmin(cdist(pts, pts[centers]), axis=1)
    logger.debug("clustered %d points into %d centers", len(pts), len(centers))
    return PointCloud(pts[centers].copy()), assignment


def target_edge_count(M: int, density: str) -> int:
    if density == "log":
        target = math.ceil(M * math.log(M))
    elif density == "sqrt":
        target = math.ceil(M * math.sqrt(M))
    else:
        raise InvalidParams(f"density must be one of {DENSITIES}, got {density!r}")
    return min(target, M * (M - 1) // 2)


def _sample_pairs(M: int, count: int, rng: np.random.Generator):
    total = M * (M - 1) // 2
    if total <= _SHUFFLE_LIMIT:
        iu, ju = np.triu_indices(M, k=1)
        pick = np.sort(rng.permutation(total)[:count])
        return iu[pick], ju[pick]

    keys = np.zeros(0, dtype=np.int64)
    while len(keys) < count:
        need = count - len(keys)
        a = rng.integers(0, M, size=2 * need + 16)
        b = rng.integers(0, M, size=2 * need + 16)
        ok = a != b
        lo, hi = np.minimum(a[ok], b[ok]), np.maximum(a[ok], b[ok])
        merged = np.concatenate([keys, lo * M + hi])
        _, first = np.unique(merged, return_index=True)
        keys = merged[np.sort(first)][:count]
    return keys // M, keys % M


def build_random_graph(centroids: PointCloud, density: str, seed=None) -> PhysicalGraph:
    """Random connected graph on the centroids.

    Raises:
        SingleNode: fewer than two centroids.
        DegenerateCentroids: two centroids coincide.
    """
    M = len(centroids)
    if M < 2:
        raise SingleNode("a random graph needs at least two centroids")
    target = target_edge_count(M, density)
    pts = centroids.points
    if len(np.unique(pts, axis=0)) < M:
        raise DegenerateCentroids("centroids must be pairwise distinct")

    rng = np.random.default_rng(seed)
    u, v = _sample_pairs(M, target, rng)

    adj = coo_matrix((np.ones(len(u)), (u, v)), shape=(M, M))
    n_c, labels = csgraph.connected_components(adj, directed=False)
    if n_c > 1:
        order = rng.permutation(n_c)
        picks = [int(rng.choice(np.flatnonzero(labels == c))) for c in order]
        u = np.concatenate([u, picks[:-1]])
        v = np.concatenate([v, picks[1:]])
    logger.info("random graph: %d nodes, %d sampled edges, %d joining edges", M, target, n_c - 1)

    weights = np.linalg.norm(pts[u] - pts[v], axis=1)
    return build_graph(M, np.column_stack([u, v, weights]))


def build_graph_from_points(pc: PointCloud, M: int, density: str, seed=None):
    """Cluster a cloud into ``M`` centers and build a random graph over them.

    Returns the graph and each point's node.
    """
    centroids, assignment = farthest_point_clustering(pc, M, seed)
    return build_random_graph(centroids, density, seed), assignment
