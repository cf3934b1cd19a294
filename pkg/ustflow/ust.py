"""Closed-form unbalanced Sobolev transport on a rooted graph.

For node-supported measures the distance reduces to a sum over the edges of a
shortest-path tree::

    US = b * (sum_e omega(e) * |mu(g_e) - nu(g_e)|**p) ** (1/p) + theta * |mu(G) - nu(G)|

where ``g_e`` is the subtree hanging below tree edge ``e``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from .errors import InvalidParams
from .graph import PhysicalGraph, RootedPreprocess
from .measure import DiscreteMeasure

logger = logging.getLogger(__name__)

# rows of the pairwise difference block are processed in slabs of about this many floats
_BLOCK_FLOATS = 1 << 22

__all__ = [
    "UstParams",
    "EdgeMassProfile",
    "theta",
    "edge_cumulative_masses",
    "ust_distance",
    "ust_from_profiles",
    "touched_edges",
    "profile_matrix",
    "distance_row",
    "pairwise_matrix",
    "assemble_symmetric",
]


class UstParams(BaseModel):
    """Parameters of the distance.

    ``p`` may be ``math.inf``. ``omega`` is an optional per-edge weight aligned with
    the graph's edge-ids; ``None`` means the length measure (``omega(e) = w_e``).
    Constraint violations raise :class:`InvalidParams`.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    p: float = 1.0
    b: float = 1.0
    lam: float = Field(1.0, alias="lambda")
    alpha: float = 0.0
    w1_root: float = 1.0
    w2_root: float = 1.0
    omega: Optional[tuple[float, ...]] = None

    _omega_cache: Optional[tuple] = PrivateAttr(default=None)

    @field_validator("omega", mode="before")
    @classmethod
    def _omega_tuple(cls, v):
        if v is None:
            return None
        return tuple(float(x) for x in np.asarray(v, dtype=np.float64).reshape(-1))

    @model_validator(mode="after")
    def _check(self):
        if math.isnan(self.p) or self.p < 1:
            raise InvalidParams(f"p must be in [1, inf], got {self.p!r}")
        for name in ("b", "lam", "alpha", "w1_root", "w2_root"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                label = "lambda" if name == "lam" else name
                raise InvalidParams(f"{label} must be a finite value >= 0, got {value!r}")
        cap = 0.5 * (self.b * self.lam + self.w1_root + self.w2_root)
        if self.alpha > cap:
            raise InvalidParams(f"alpha={self.alpha!r} exceeds (b*lambda + w1_root + w2_root)/2 = {cap!r}")
        if self.omega is not None:
            arr = np.asarray(self.omega)
            if not np.all(np.isfinite(arr) & (arr >= 0)):
                raise InvalidParams("omega values must be finite and >= 0")
        return self

    @property
    def metric_mode(self) -> bool:
        return self.w1_root == self.w2_root and self.alpha < self.b * self.lam / 2 + min(
            self.w1_root, self.w2_root
        )

    def require_metric_mode(self) -> None:
        if self.w1_root != self.w2_root:
            raise InvalidParams(
                f"w1_root ({self.w1_root!r}) and w2_root ({self.w2_root!r}) must be equal for a symmetric distance"
            )

    def omega_for(self, g: PhysicalGraph) -> np.ndarray:
        if self.omega is None:
            return g.weights
        arr = self._omega_array()
        if len(arr) != g.edge_count:
            raise InvalidParams(f"omega has {len(arr)} values but the graph has {g.edge_count} edges")
        return arr

    def _omega_array(self) -> np.ndarray:
        # keyed on the tuple itself so model_copy(update={"omega": ...}) rebuilds
        cached = self._omega_cache
        if cached is None or cached[0] is not self.omega:
            arr = np.asarray(self.omega, dtype=np.float64)
            arr.flags.writeable = False
            cached = (self.omega, arr)
            self._omega_cache = cached
        return cached[1]

    def weight_at(self, dist_to_root, a1: float, which: int = 1):
        """Affine weight ``a1 * d(root, x) + w_root`` for weight function 1 or 2."""
        root = self.w1_root if which == 1 else self.w2_root
        return a1 * np.asarray(dist_to_root, dtype=np.float64) + root


@dataclass(frozen=True, eq=False)
class EdgeMassProfile:
    """Measure of each tree edge's subtree, aligned with ``RootedPreprocess.tree_edges``."""

    values: np.ndarray
    total_mass: float


def theta(params: UstParams, mass_mu: float, mass_nu: float) -> float:
    root = params.w1_root if mass_mu >= mass_nu else params.w2_root
    return root + params.b * params.lam / 2 - params.alpha


def edge_cumulative_masses(pre: RootedPreprocess, mu: DiscreteMeasure) -> EdgeMassProfile:
    node_mass = mu.as_dense(pre.node_count)
    sub = pre.fold_subtree_masses(node_mass)
    return EdgeMassProfile(values=sub[pre.tree_children], total_mass=mu.total_mass)


def _edge_term(diff: np.ndarray, omega: np.ndarray, p: float) -> float:
    if math.isinf(p):
        live = omega > 0
        return float(diff[live].max()) if live.any() else 0.0
    if p == 1:
        return float(np.dot(omega, diff))
    if p == 2:
        return math.sqrt(float(np.dot(omega, diff * diff)))
    return float(np.dot(omega, np.power(diff, p))) ** (1.0 / p)


def ust_from_profiles(
    pre: RootedPreprocess,
    params: UstParams,
    prof_mu: EdgeMassProfile,
    prof_nu: EdgeMassProfile,
) -> float:
    omega = params.omega_for(pre.graph)[pre.tree_edges]
    diff = np.abs(prof_mu.values - prof_nu.values)
    nz = diff > 0
    term = _edge_term(diff[nz], omega[nz], params.p) if nz.any() else 0.0
    dm = abs(prof_mu.total_mass - prof_nu.total_mass)
    return params.b * term + theta(params, prof_mu.total_mass, prof_nu.total_mass) * dm


def ust_distance(
    pre: RootedPreprocess,
    params: UstParams,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
) -> float:
    """Distance between two measures, visiting only tree edges above their supports."""
    mu.check_support(pre.node_count)
    nu.check_support(pre.node_count)
    closure = pre.path_closure(np.concatenate([mu.nodes, nu.nodes]))
    a = pre.fold_on(closure, mu.nodes, mu.masses)
    b = pre.fold_on(closure, nu.nodes, nu.masses)
    omega = params.omega_for(pre.graph)[pre.parent_edge[closure]]
    diff = np.abs(a - b)
    nz = diff > 0
    term = _edge_term(diff[nz], omega[nz], params.p) if nz.any() else 0.0
    dm = abs(mu.total_mass - nu.total_mass)
    return params.b * term + theta(params, mu.total_mass, nu.total_mass) * dm


def touched_edges(prof_mu: EdgeMassProfile, prof_nu: EdgeMassProfile) -> int:
    """Number of tree edges whose subtree carries mass of either measure."""
    return int(np.count_nonzero((prof_mu.values != 0) | (prof_nu.values != 0)))


def profile_matrix(pre: RootedPreprocess, ms: Sequence[DiscreteMeasure]):
    """Stack every measure's profile into ``(len(ms), node_count-1)`` plus total masses."""
    n = pre.node_count
    dense = np.zeros((len(ms), n))
    for i, m in enumerate(ms):
        dense[i] = m.as_dense(n)
    subs = np.stack([pre.fold_subtree_masses(row) for row in dense]) if len(ms) else dense
    masses = np.array([m.total_mass for m in ms])
    return subs[:, pre.tree_children], masses


def distance_row(
    pre: RootedPreprocess,
    params: UstParams,
    profiles: np.ndarray,
    masses: np.ndarray,
    i: int,
    start: int = 0,
) -> np.ndarray:
    """Distances from measure ``i`` to measures ``start..`` of a profile matrix.

    Both weight roots must be equal, so a single theta serves every pair.
    """
    params.require_metric_mode()
    omega = params.omega_for(pre.graph)[pre.tree_edges]
    others = profiles[start:]
    out = np.empty(len(others))
    th = theta(params, 1.0, 0.0)
    block = max(1, _BLOCK_FLOATS // max(1, profiles.shape[1]))
    p = params.p
    live = omega > 0
    for lo in range(0, len(others), block):
        diff = np.abs(others[lo:lo + block] - profiles[i])
        if math.isinf(p):
            term = diff[:, live].max(axis=1) if live.any() else np.zeros(len(diff))
        elif p == 1:
            term = diff @ omega
        elif p == 2:
            term = np.sqrt((diff * diff) @ omega)
        else:
            term = (np.power(diff, p) @ omega) ** (1.0 / p)
        out[lo:lo + block] = params.b * term
    out += th * np.abs(masses[start:] - masses[i])
    return out


def pairwise_matrix(
    pre: RootedPreprocess,
    params: UstParams,
    ms: Sequence[DiscreteMeasure],
) -> np.ndarray:
    """Symmetric matrix of distances between every pair of ``ms``."""
    params.require_metric_mode()
    if not ms:
        raise InvalidParams("pairwise_matrix needs at least one measure")
    profiles, masses = profile_matrix(pre, ms)
    return assemble_symmetric(
        [distance_row(pre, params, profiles, masses, i, start=i + 1) for i in range(len(ms))]
    )


def assemble_symmetric(upper_rows: Sequence[np.ndarray]) -> np.ndarray:
    """Build a symmetric zero-diagonal matrix from strictly-upper row segments.

    ``upper_rows[i]`` holds entries ``(i, i+1..n-1)``.
    """
    n = len(upper_rows)
    out = np.zeros((n, n))
    for i, row in enumerate(upper_rows):
        out[i, i + 1:] = row
    return out + out.T
