"""Nonnegative measures supported on finitely many graph nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NegativeMass, NegativeScale, SupportOffGraph

__all__ = ["DiscreteMeasure", "new_measure", "add", "scale", "dirac", "zero_measure", "truncate"]


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Canonical node-supported measure.

    ``nodes`` is strictly increasing, every entry of ``masses`` is positive and
    ``total_mass`` is the exactly rounded sum of ``masses``. Build instances with
    :func:`new_measure` rather than the constructor.
    """

    nodes: np.ndarray
    masses: np.ndarray
    total_mass: float

    @classmethod
    def from_arrays(cls, nodes, masses) -> "DiscreteMeasure":
        nodes = np.asarray(nodes).reshape(-1)
        masses = np.asarray(masses, dtype=np.float64).reshape(-1)
        if nodes.shape != masses.shape:
            raise ValueError("nodes and masses must have the same length")
        if nodes.size and not np.all(nodes == np.floor(nodes)):
            raise SupportOffGraph("node ids must be integers")
        nodes = nodes.astype(np.int64)
        if nodes.size and nodes.min() < 0:
            raise SupportOffGraph(f"node id {int(nodes.min())} is negative")
        bad = np.flatnonzero(~np.isfinite(masses) | (masses < 0))
        if bad.size:
            raise NegativeMass(f"node {int(nodes[bad[0]])} has mass {masses[bad[0]]!r}")

        uniq, inverse = np.unique(nodes, return_inverse=True)
        merged = np.bincount(inverse.reshape(-1), weights=masses, minlength=len(uniq)) if nodes.size else masses
        keep = merged > 0
        uniq, merged = uniq[keep], merged[keep]
        return cls(nodes=uniq, masses=merged, total_mass=math.fsum(merged.tolist()))

    @property
    def support_size(self) -> int:
        return len(self.nodes)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(v), float(m)) for v, m in zip(self.nodes, self.masses)]

    def is_zero(self) -> bool:
        return self.nodes.size == 0

    def check_support(self, node_count: int) -> None:
        if self.nodes.size and self.nodes[-1] >= node_count:
            raise SupportOffGraph(
                f"support node {int(self.nodes[-1])} is not in a graph with {node_count} nodes"
            )

    def as_dense(self, node_count: int) -> np.ndarray:
        self.check_support(node_count)
        out = np.zeros(node_count)
        out[self.nodes] = self.masses
        return out

    def __add__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return add(self, other)

    def __mul__(self, c):
        if isinstance(c, DiscreteMeasure):
            return NotImplemented
        return scale(self, c)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(self.masses, other.masses)

    def __hash__(self):
        return hash((self.nodes.tobytes(), self.masses.tobytes()))

    def __repr__(self):
        return f"DiscreteMeasure({self.entries}, total_mass={self.total_mass!r})"


def new_measure(entries: Iterable[Sequence]) -> DiscreteMeasure:
    """Build a canonical measure from ``(node, mass)`` pairs.

    Duplicate nodes are merged by summation and zero masses are dropped.
    """
    records = list(entries)
    if not records:
        return zero_measure()
    nodes = [r[0] for r in records]
    masses = [r[1] for r in records]
    return DiscreteMeasure.from_arrays(nodes, masses)


def zero_measure() -> DiscreteMeasure:
    return DiscreteMeasure(
        nodes=np.zeros(0, dtype=np.int64), masses=np.zeros(0), total_mass=0.0
    )


def dirac(node: int, mass: float = 1.0) -> DiscreteMeasure:
    return new_measure([(node, mass)])


def add(a: DiscreteMeasure, b: DiscreteMeasure) -> DiscreteMeasure:
    return DiscreteMeasure.from_arrays(
        np.concatenate([a.nodes, b.nodes]), np.concatenate([a.masses, b.masses])
    )


def scale(a: DiscreteMeasure, c: float) -> DiscreteMeasure:
    c = float(c)
    if not math.isfinite(c) or c < 0:
        raise NegativeScale(f"scale factor must be a finite value >= 0, got {c!r}")
    if c == 0.0:
        return zero_measure()
    return DiscreteMeasure.from_arrays(a.nodes, a.masses * c)


def truncate(a: DiscreteMeasure, k: int) -> DiscreteMeasure:
    """Keep the ``k`` heaviest support nodes; equal masses keep the lower node ids."""
    if k >= a.support_size:
        return a
    keep = np.sort(np.argsort(-a.masses, kind="stable")[:k])
    return DiscreteMeasure.from_arrays(a.nodes[keep], a.masses[keep])
