import math
import unittest
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))
from ustflow.errors import NonPositiveT, NonSymmetricInput
from ustflow.graph import shortest_path_tree
from ustflow.kernel import (
    PSD_TOL,
    GramMatrix,
    bandwidth_grid,
    gram,
    min_eigenvalue,
    neg_def_violation,
    quadratic_form_violation,
    rescale_gram,
)
from ustflow.measure import dirac
from ustflow.ust import UstParams, pairwise_matrix, ust_distance
from helpers import random_connected_graph, random_measure


class TestGram(unittest.TestCase):
    def test_unit_diagonal(self):
        g = gram(np.zeros((3, 3)), 2.0)
        np.testing.assert_array_equal(g.values, np.ones((3, 3)))
        self.assertEqual(g.size, 3)

    def test_two_points(self):
        g = gram([[0.0, 2.0], [2.0, 0.0]], 0.5)
        self.assertEqual(g.values[0, 1], 0.36787944117144233)
        self.assertEqual(g.values[0, 1], math.exp(-1))
        self.assertEqual(g.t, 0.5)

    def test_bad_t(self):
        for t in (0.0, -1.0, float("inf"), float("nan")):
            with self.assertRaises(NonPositiveT):
                gram(np.zeros((2, 2)), t)

    def test_asymmetric(self):
        with self.assertRaises(NonSymmetricInput):
            gram([[0.0, 1.0], [2.0, 0.0]], 1.0)

    def test_not_square(self):
        with self.assertRaises(NonSymmetricInput):
            gram(np.zeros((2, 3)), 1.0)

    def test_nonzero_diagonal(self):
        with self.assertRaises(NonSymmetricInput):
            gram([[1.0, 1.0], [1.0, 0.0]], 1.0)

    def test_rescale(self):
        d = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]])
        g = rescale_gram(gram(d, 0.5), 2.0)
        np.testing.assert_allclose(g.values, gram(d, 2.0).values, rtol=1e-14)
        self.assertEqual(g.t, 2.0)


class TestMinEigenvalue(unittest.TestCase):
    def test_identity(self):
        self.assertAlmostEqual(min_eigenvalue(np.eye(4)), 1.0, delta=1e-14)

    def test_rank_one(self):
        self.assertAlmostEqual(min_eigenvalue(GramMatrix(np.ones((2, 2)), 1.0)), 0.0, delta=1e-14)

    def test_empty(self):
        self.assertEqual(min_eigenvalue(np.zeros((0, 0))), 0.0)


class TestNegativeDefiniteness(unittest.TestCase):
    def test_two_measures(self):
        pre = shortest_path_tree(random_connected_graph(np.random.default_rng(0), 5), 0)
        dist = lambda a, b: ust_distance(pre, UstParams(), a, b)
        # any zero-sum pair of weights gives -2 * c^2 * d
        self.assertLess(neg_def_violation(dist, [dirac(1), dirac(2)], trials=5), 0.0)

    def test_identical_measures(self):
        pre = shortest_path_tree(random_connected_graph(np.random.default_rng(1), 5), 0)
        dist = lambda a, b: ust_distance(pre, UstParams(), a, b)
        self.assertEqual(neg_def_violation(dist, [dirac(1)] * 4), 0.0)

    def test_non_negative_definite_matrix_is_detected(self):
        # fourth powers of distances on a line are not conditionally negative definite
        x = np.array([0.0, 1.0, 2.0, 10.0])
        d = (x[:, None] - x[None, :]) ** 4
        self.assertGreater(quadratic_form_violation(d, trials=2000, seed=3), 0.0)

    def test_single_point(self):
        self.assertEqual(quadratic_form_violation(np.zeros((1, 1))), 0.0)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
@pytest.mark.parametrize("seed", range(50))
def test_gram_is_positive_semidefinite(seed, p, t):
    rng = np.random.default_rng(5000 + seed)
    g = random_connected_graph(rng, int(rng.integers(3, 30)))
    pre = shortest_path_tree(g, int(rng.integers(g.node_count)))
    ms = [random_measure(rng, g.node_count) for _ in range(int(rng.integers(2, 26)))]
    params = UstParams(p=p, lam=float(rng.uniform(0, 2)), alpha=float(rng.uniform(0, 1)))
    d = pairwise_matrix(pre, params, ms)
    assert min_eigenvalue(gram(d, t)) >= -PSD_TOL
    assert quadratic_form_violation(d, trials=50, seed=seed) <= PSD_TOL * max(1.0, d.max())


def test_order_three_is_only_recorded():
    rng = np.random.default_rng(77)
    g = random_connected_graph(rng, 20)
    pre = shortest_path_tree(g, 0)
    ms = [random_measure(rng, g.node_count) for _ in range(15)]
    d = pairwise_matrix(pre, UstParams(p=3), ms)
    # no sign is claimed above p = 2; the value must still be computable
    assert math.isfinite(min_eigenvalue(gram(d, 1.0)))


def test_infinite_divisibility():
    rng = np.random.default_rng(11)
    g = random_connected_graph(rng, 15)
    pre = shortest_path_tree(g, 0)
    d = pairwise_matrix(pre, UstParams(p=2), [random_measure(rng, g.node_count) for _ in range(10)])
    base = gram(d, 1.0)
    for k in (2, 3, 5):
        root = rescale_gram(base, 1.0 / k)
        np.testing.assert_allclose(root.values ** k, base.values, rtol=1e-12)
        assert min_eigenvalue(root) >= -PSD_TOL


class TestBandwidthGrid(unittest.TestCase):
    def test_deciles_of_constant_distances(self):
        d = np.ones((3, 3)) - np.eye(3)
        np.testing.assert_allclose(bandwidth_grid(d), [0.2, 0.5, 1.0])

    def test_sorted_and_positive(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 10, 12)
        d = np.abs(x[:, None] - x[None, :])
        ts = bandwidth_grid(d, sample_size=30, seed=1)
        self.assertTrue(np.all(ts > 0))
        self.assertTrue(np.all(np.diff(ts) > 0))
        self.assertLessEqual(len(ts), 27)

    def test_all_zero(self):
        self.assertEqual(len(bandwidth_grid(np.zeros((3, 3)))), 0)
