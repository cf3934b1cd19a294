"""Positive-definite kernels ``exp(-t * d)`` built from distance matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import eigvalsh

from .errors import NonPositiveT, NonSymmetricInput
from .measure import DiscreteMeasure

logger = logging.getLogger(__name__)

PSD_TOL = 1e-8
QUANTILES = tuple(range(10, 100, 10))
BANDWIDTH_MULTIPLIERS = (1.0, 2.0, 5.0)

__all__ = [
    "GramMatrix",
    "gram",
    "rescale_gram",
    "min_eigenvalue",
    "neg_def_violation",
    "quadratic_form_violation",
    "bandwidth_grid",
]


@dataclass(frozen=True, eq=False)
class GramMatrix:
    values: np.ndarray
    t: float

    @property
    def size(self) -> int:
        return len(self.values)


def _check_t(t) -> float:
    t = float(t)
    if not (np.isfinite(t) and t > 0):
        raise NonPositiveT(f"t must be a finite value > 0, got {t!r}")
    return t


def _check_distances(dists) -> np.ndarray:
    d = np.asarray(dists, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise NonSymmetricInput(f"distance matrix must be square, got shape {d.shape}")
    if not np.isfinite(d).all():
        raise NonSymmetricInput("distance matrix has non-finite entries")
    scale = max(1.0, float(np.abs(d).max())) if d.size else 1.0
    if np.abs(d - d.T).max(initial=0.0) > 1e-12 * scale:
        raise NonSymmetricInput("distance matrix is not symmetric")
    if np.abs(np.diag(d)).max(initial=0.0) > 0:
        raise NonSymmetricInput("distance matrix must have a zero diagonal")
    if (d < 0).any():
        raise NonSymmetricInput("distance matrix has negative entries")
    return d


def gram(dists, t: float) -> GramMatrix:
    """Elementwise ``exp(-t * d)``."""
    t = _check_t(t)
    d = _check_distances(dists)
    return GramMatrix(values=np.exp(-t * d), t=t)


def rescale_gram(g: GramMatrix, t_new: float) -> GramMatrix:
    """The Gram matrix for bandwidth ``t_new`` from one already built at ``g.t``."""
    t_new = _check_t(t_new)
    return GramMatrix(values=np.power(g.values, t_new / g.t), t=t_new)


def min_eigenvalue(m) -> float:
    values = m.values if isinstance(m, GramMatrix) else np.asarray(m, dtype=np.float64)
    if values.size == 0:
        return 0.0
    return float(eigvalsh(values, subset_by_index=[0, 0])[0])


def _zero_sum_directions(n: int, trials: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((trials, n))
    c -= c.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(c, axis=1, keepdims=True)
    return c / np.where(norms > 0, norms, 1.0)


def quadratic_form_violation(dists, trials: int = 100, seed=0) -> float:
    """Largest ``c^T D c`` over random unit vectors ``c`` with ``sum(c) == 0``.

    A conditionally negative definite ``D`` keeps this at or below zero.
    """
    d = np.asarray(dists, dtype=np.float64)
    if len(d) < 2:
        return 0.0
    c = _zero_sum_directions(len(d), trials, seed)
    forms = np.einsum("ti,ij,tj->t", c, d, c)
    return float(forms.max())


def neg_def_violation(
    dist_fn: Callable[[DiscreteMeasure, DiscreteMeasure], float],
    ms: Sequence[DiscreteMeasure],
    trials: int = 100,
    seed=0,
) -> float:
    n = len(ms)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = dist_fn(ms[i], ms[j])
    return quadratic_form_violation(d, trials, seed)


def bandwidth_grid(dists, sample_size: Optional[int] = None, seed=0) -> np.ndarray:
    """Candidate bandwidths ``t`` with ``1/t`` in ``{q, 2q, 5q}`` for deciles ``q``.

    Deciles come from the off-diagonal distances, or from a seeded sample of
    ``sample_size`` of them.
    """
    d = _check_distances(dists)
    iu = np.triu_indices(len(d), k=1)
    pool = d[iu]
    if sample_size is not None and sample_size < pool.size:
        rng = np.random.default_rng(seed)
        pool = rng.choice(pool, size=sample_size, replace=False)
    pool = pool[pool > 0]
    if pool.size == 0:
        logger.warning("no positive distances; bandwidth grid is empty")
        return np.zeros(0)
    qs = np.percentile(pool, QUANTILES)
    inv = np.unique(np.outer(qs, BANDWIDTH_MULTIPLIERS).ravel())
    return np.sort(1.0 / inv)
