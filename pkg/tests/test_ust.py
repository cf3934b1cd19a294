import math
import unittest
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))
from ustflow.errors import InvalidParams, SupportOffGraph
from ustflow.graph import shortest_path_tree
from ustflow.measure import dirac, new_measure, scale, zero_measure
from ustflow.ust import (
    UstParams,
    distance_row,
    edge_cumulative_masses,
    pairwise_matrix,
    profile_matrix,
    theta,
    touched_edges,
    ust_distance,
    ust_from_profiles,
)
from helpers import path3, random_connected_graph, random_measure


class TestUstParams(unittest.TestCase):
    def test_defaults(self):
        params = UstParams()
        self.assertEqual((params.p, params.b, params.lam, params.alpha), (1.0, 1.0, 1.0, 0.0))
        self.assertTrue(params.metric_mode)

    def test_lambda_alias(self):
        self.assertEqual(UstParams(**{"lambda": 2.5}).lam, 2.5)
        self.assertEqual(UstParams(lam=2.5).lam, 2.5)

    def test_p_below_one(self):
        with self.assertRaises(InvalidParams):
            UstParams(p=0.5)

    def test_infinite_p(self):
        self.assertTrue(math.isinf(UstParams(p=math.inf).p))

    def test_negative_b(self):
        with self.assertRaises(InvalidParams):
            UstParams(b=-1.0)

    def test_alpha_cap(self):
        UstParams(alpha=1.5)
        with self.assertRaises(InvalidParams):
            UstParams(alpha=1.6)

    def test_negative_omega(self):
        with self.assertRaises(InvalidParams):
            UstParams(omega=[1.0, -1.0])

    def test_omega_length_must_match(self):
        params = UstParams(omega=[1.0])
        with self.assertRaises(InvalidParams):
            params.omega_for(path3())

    def test_omega_array_built_once(self):
        params = UstParams(omega=[1.0, 2.0])
        first = params.omega_for(path3())
        self.assertIs(params.omega_for(path3()), first)
        self.assertFalse(first.flags.writeable)
        np.testing.assert_array_equal(first, [1.0, 2.0])

    def test_copied_params_use_new_omega(self):
        params = UstParams(omega=[1.0, 2.0])
        params.omega_for(path3())
        moved = params.model_copy(update={"omega": (3.0, 4.0)})
        np.testing.assert_array_equal(moved.omega_for(path3()), [3.0, 4.0])
        np.testing.assert_array_equal(params.omega_for(path3()), [1.0, 2.0])

    def test_frozen(self):
        with self.assertRaises(Exception):
            UstParams().p = 2.0


class TestTheta(unittest.TestCase):
    def test_first_branch(self):
        self.assertEqual(theta(UstParams(), 2.0, 1.0), 1.5)

    def test_symmetric_roots(self):
        self.assertEqual(theta(UstParams(), 1.0, 2.0), 1.5)

    def test_second_branch(self):
        params = UstParams(w1_root=0.0, w2_root=3.0)
        self.assertEqual(theta(params, 1.0, 2.0), 3.5)
        self.assertEqual(theta(params, 2.0, 1.0), 0.5)


class TestEdgeProfiles(unittest.TestCase):
    def setUp(self):
        self.pre = shortest_path_tree(path3(), 0)
        # tree_edges lists e12 before e01
        self.order = self.pre.tree_edges.tolist()

    def profile(self, mu):
        prof = edge_cumulative_masses(self.pre, mu)
        return dict(zip(self.order, prof.values.tolist()))

    def test_dirac_one(self):
        self.assertEqual(self.profile(dirac(1)), {0: 1.0, 1: 0.0})

    def test_dirac_two(self):
        self.assertEqual(self.profile(dirac(2)), {0: 1.0, 1: 1.0})

    def test_root_dirac_is_zero(self):
        self.assertEqual(self.profile(dirac(0)), {0: 0.0, 1: 0.0})

    def test_off_graph(self):
        with self.assertRaises(SupportOffGraph):
            edge_cumulative_masses(self.pre, dirac(3))

    def test_touched_edges(self):
        a = edge_cumulative_masses(self.pre, dirac(1))
        b = edge_cumulative_masses(self.pre, dirac(0))
        self.assertEqual(touched_edges(a, b), 1)


class TestGoldenValues(unittest.TestCase):
    def setUp(self):
        self.pre = shortest_path_tree(path3(), 0)

    def test_balanced_p1(self):
        self.assertEqual(ust_distance(self.pre, UstParams(), dirac(1), dirac(2)), 2.0)

    def test_balanced_p2(self):
        value = ust_distance(self.pre, UstParams(p=2), dirac(1), dirac(2))
        self.assertAlmostEqual(value, math.sqrt(2), delta=1e-12)

    def test_unbalanced_p1(self):
        value = ust_distance(self.pre, UstParams(), dirac(1, 2.0), dirac(2))
        self.assertAlmostEqual(value, 4.5, delta=1e-12)

    def test_equal_measures(self):
        mu = new_measure([(0, 0.5), (2, 1.25)])
        self.assertEqual(ust_distance(self.pre, UstParams(p=3), mu, mu), 0.0)

    def test_profiles_agree_with_sparse_path(self):
        mu, nu = dirac(1, 2.0), dirac(2)
        a = edge_cumulative_masses(self.pre, mu)
        b = edge_cumulative_masses(self.pre, nu)
        self.assertEqual(ust_from_profiles(self.pre, UstParams(), a, b), 4.5)

    def test_infinite_order(self):
        self.assertEqual(ust_distance(self.pre, UstParams(p=math.inf), dirac(1), dirac(2)), 1.0)

    def test_infinite_order_ignores_zero_weight_edges(self):
        params = UstParams(p=math.inf, omega=[1.0, 0.0])
        self.assertEqual(ust_distance(self.pre, params, dirac(1), dirac(2)), 0.0)

    def test_custom_omega(self):
        params = UstParams(omega=[0.0, 5.0])
        self.assertEqual(ust_distance(self.pre, params, dirac(1), dirac(2)), 5.0)

    def test_against_zero_measure(self):
        # only the mass term survives when mu sits at the root
        self.assertEqual(ust_distance(self.pre, UstParams(), dirac(0), zero_measure()), 1.5)

    def test_support_off_graph(self):
        with self.assertRaises(SupportOffGraph):
            ust_distance(self.pre, UstParams(), dirac(5), dirac(1))


class TestPairwiseMatrix(unittest.TestCase):
    def setUp(self):
        self.pre = shortest_path_tree(path3(), 0)

    def test_single_measure(self):
        np.testing.assert_array_equal(pairwise_matrix(self.pre, UstParams(), [dirac(1)]), [[0.0]])

    def test_two_diracs(self):
        np.testing.assert_array_equal(
            pairwise_matrix(self.pre, UstParams(), [dirac(1), dirac(2)]), [[0.0, 2.0], [2.0, 0.0]]
        )

    def test_midpoint_row(self):
        mu, nu = dirac(1), dirac(2)
        mid = scale(mu, 0.5) + scale(nu, 0.5)
        m = pairwise_matrix(self.pre, UstParams(), [mu, nu, mid])
        self.assertAlmostEqual(m[0, 2], m[0, 1] / 2, delta=1e-12)
        self.assertAlmostEqual(m[1, 2], m[0, 1] / 2, delta=1e-12)

    def test_asymmetric_roots_rejected(self):
        with self.assertRaises(InvalidParams):
            pairwise_matrix(self.pre, UstParams(w1_root=0.0, w2_root=2.0), [dirac(1), dirac(2)])

    def test_empty_list_rejected(self):
        with self.assertRaises(InvalidParams):
            pairwise_matrix(self.pre, UstParams(), [])

    def test_distance_row_offsets(self):
        ms = [dirac(0), dirac(1), dirac(2)]
        profiles, masses = profile_matrix(self.pre, ms)
        np.testing.assert_array_equal(distance_row(self.pre, UstParams(), profiles, masses, 0), [0.0, 1.0, 3.0])
        np.testing.assert_array_equal(distance_row(self.pre, UstParams(), profiles, masses, 0, start=2), [3.0])


def _naive_profile(pre, mu):
    """Walk every support node's root path and credit each edge on it."""
    out = {int(e): 0.0 for e in pre.tree_edges}
    for v, m in mu.entries:
        while v != pre.root:
            out[int(pre.parent_edge[v])] += m
            v = int(pre.parent[v])
    return out


@pytest.mark.parametrize("seed", range(25))
def test_aggregation_matches_naive_walk(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, int(rng.integers(2, 51)))
    pre = shortest_path_tree(g, int(rng.integers(g.node_count)))
    mu = random_measure(rng, g.node_count, max_support=10, dyadic=True)
    prof = edge_cumulative_masses(pre, mu)
    assert dict(zip(pre.tree_edges.tolist(), prof.values.tolist())) == _naive_profile(pre, mu)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, math.inf])
def test_sparse_and_dense_paths_agree(p):
    rng = np.random.default_rng(int(10 * p) if math.isfinite(p) else 99)
    g = random_connected_graph(rng, 40)
    pre = shortest_path_tree(g, 0)
    params = UstParams(p=p, lam=0.7, alpha=0.2)
    ms = [random_measure(rng, g.node_count, max_support=8) for _ in range(6)]
    m = pairwise_matrix(pre, params, ms)
    for i in range(len(ms)):
        for j in range(len(ms)):
            expected = ust_distance(pre, params, ms[i], ms[j])
            assert m[i, j] == pytest.approx(expected, rel=1e-12, abs=1e-12)
            prof = ust_from_profiles(pre, params, edge_cumulative_masses(pre, ms[i]), edge_cumulative_masses(pre, ms[j]))
            assert prof == pytest.approx(expected, rel=1e-12, abs=1e-12)
