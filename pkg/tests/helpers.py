"""Seeded random instances shared by the test suites."""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))
from ustflow.graph import build_graph
from ustflow.measure import DiscreteMeasure


def path3():
    """P3: 0 -1.0- 1 -2.0- 2."""
    return build_graph(3, [(0, 1, 1.0), (1, 2, 2.0)])


def triangle():
    return build_graph(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])


def grid(k, weight=1.0):
    """k x k grid with equal edge lengths; node id is row * k + col."""
    edges = []
    for r in range(k):
        for c in range(k):
            v = r * k + c
            if c + 1 < k:
                edges.append((v, v + 1, weight))
            if r + 1 < k:
                edges.append((v, v + k, weight))
    return build_graph(k * k, edges)


def random_tree(rng, n, wmin=0.1, wmax=2.0):
    """Random recursive tree; lengths uniform in (wmin, wmax)."""
    perm = rng.permutation(n)
    edges = []
    for i in range(1, n):
        j = int(rng.integers(i))
        edges.append((int(perm[i]), int(perm[j]), float(rng.uniform(wmin, wmax))))
    return build_graph(n, edges)


def random_connected_graph(rng, n, extra=None, wmin=0.1, wmax=2.0):
    """Random tree plus ``extra`` random chords, continuous lengths (unique paths almost surely)."""
    g = random_tree(rng, n, wmin, wmax)
    edges = g.edges
    seen = {(min(u, v), max(u, v)) for u, v, _ in edges}
    if extra is None:
        extra = int(rng.integers(0, n + 1))
    for _ in range(extra):
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        key = (min(u, v), max(u, v))
        if key in seen:
            continue
        seen.add(key)
        edges.append((u, v, float(rng.uniform(wmin, wmax))))
    return build_graph(n, edges)


def random_measure(rng, n, max_support=6, total=None, dyadic=False):
    """Random measure on up to ``max_support`` nodes.

    ``dyadic`` masses are multiples of 1/8 so that sums are exact in floating point.
    ``total`` rescales the measure to that mass.
    """
    k = int(rng.integers(1, min(max_support, n) + 1))
    nodes = rng.choice(n, size=k, replace=False)
    if dyadic:
        masses = rng.integers(1, 17, size=k) / 8.0
    else:
        masses = rng.uniform(0.1, 2.0, size=k)
    if total is not None:
        masses = masses * (total / masses.sum())
    return DiscreteMeasure.from_arrays(nodes, masses)


def balanced_pair(rng, n, max_support=6):
    mu = random_measure(rng, n, max_support)
    nu = random_measure(rng, n, max_support, total=mu.total_mass)
    return mu, nu
