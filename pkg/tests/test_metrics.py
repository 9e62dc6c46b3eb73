"""Tests for network statistics: length, degree, routes and ratio profiles."""

import math
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from builders import (
    build_delaunay,
    build_gabriel,
    build_mst,
    build_proximity,
    build_relative_neighborhood,
    complete_edges,
    overlay_line_process,
)
from geometry import sample_finite_model
from hammersley import build_hammersley
from metrics import (
    NetSummary,
    ProfileParams,
    RhoBin,
    RhoProfile,
    avg_degree,
    connected_components,
    degree_histogram,
    normalized_length,
    rho_profile,
    route_lengths,
    summarize,
    summarize_with_profile,
)
from network import FamilyTag, Network
from road_errors import InvalidParameterError
from templates import beta_template
from tests.oracles import all_pairs_routes, config_from


def profile_of(means, width=1.0):
    bins = [RhoBin(center=k * width, count=10, mean_ratio=m, max_ratio=0.0 if m is None else m)
            for k, m in enumerate(means)]
    return RhoProfile(bin_width=width, d_max=width * (len(means) - 1), inner_margin=0.0, min_count=1, bins=bins)


def shaped_profile(rho, width=0.5, d_max=10.0):
    centers = [k * width for k in range(int(round(d_max / width)) + 1)]
    return profile_of([max(rho(c), 0.0) if c > 0 else 0.0 for c in centers], width)


class TestLengthAndDegree(unittest.TestCase):

    def test_empty_network_has_zero_length(self):
        net = Network(sample_finite_model(20, 1), [], FamilyTag("empty"))
        self.assertEqual(normalized_length(net), 0.0)
        self.assertEqual(normalized_length(net, 0.1), 0.0)

    def test_length_per_unit_area(self):
        config = config_from([[0.0, 0.0], [2.0, 0.0]], side=2.0)
        net = Network(config, [(0, 1)], FamilyTag("pair"))
        self.assertAlmostEqual(normalized_length(net), 0.5)

    def test_tree_degree(self):
        net = build_mst(sample_finite_model(100, 2))
        self.assertAlmostEqual(avg_degree(net, 0.0), 2.0 * 99 / 100)

    def test_degree_histogram_counts_cities(self):
        net = build_mst(sample_finite_model(100, 2))
        hist = degree_histogram(net)
        self.assertEqual(sum(hist.values()), 100)
        self.assertEqual(sum(k * c for k, c in hist.items()), 2 * 99)

    def test_inner_length_estimator_is_close_to_plain(self):
        net = build_gabriel(sample_finite_model(2500, 3))
        self.assertLess(abs(normalized_length(net, 0.1) - 2.0), 0.1)
        self.assertLess(normalized_length(net), normalized_length(net, 0.1))

    def test_components(self):
        config = config_from([[0.1, 0.1], [0.3, 0.2], [0.8, 0.9], [0.9, 0.7]], side=1.0)
        count, labels = connected_components(Network(config, [(0, 1), (2, 3)], FamilyTag("two")))
        self.assertEqual(count, 2)
        self.assertEqual(labels[0], labels[1])
        self.assertNotEqual(labels[1], labels[2])


class TestRouteLengths(unittest.TestCase):

    def test_self_and_direct_edge(self):
        config = config_from([[0.0, 0.0], [3.0, 4.0], [5.0, 0.0]], side=5.0)
        net = Network(config, [(0, 1), (1, 2)], FamilyTag("path"))
        dist = route_lengths(net, 0)
        self.assertEqual(dist[0], 0.0)
        self.assertAlmostEqual(dist[1], 5.0)
        self.assertAlmostEqual(dist[2], 5.0 + math.hypot(2.0, 4.0))

    def test_unreachable_is_infinite(self):
        config = config_from([[0.1, 0.1], [0.3, 0.2], [0.8, 0.9]], side=1.0)
        dist = route_lengths(Network(config, [(0, 1)], FamilyTag("x")), 0)
        self.assertTrue(math.isinf(dist[2]))

    def test_source_out_of_range(self):
        net = build_mst(sample_finite_model(10, 1))
        with self.assertRaises(InvalidParameterError):
            route_lengths(net, 10)

    def test_matches_all_pairs_oracle(self):
        for seed in range(800, 810):
            config = sample_finite_model(64, seed)
            nets = [build_gabriel(config), build_mst(config), build_proximity(config, beta_template(0.8)),
                    overlay_line_process(build_mst(config), 0.3, seed)]
            for net in nets:
                oracle = all_pairs_routes(net)[:net.n_cities, :net.n_cities]
                got = np.vstack([route_lengths(net, s) for s in range(net.n_cities)])
                np.testing.assert_allclose(got, oracle, rtol=1e-12, atol=1e-12, err_msg=net.family.describe())

    def test_routes_never_shorter_than_distance(self):
        config = sample_finite_model(200, 4)
        net = build_relative_neighborhood(config)
        d = np.hypot(*(config.points - config.points[0]).T)
        self.assertTrue(np.all(route_lengths(net, 0) >= d - 1e-12))


class TestRhoProfile(unittest.TestCase):

    def test_complete_graph_has_zero_ratios(self):
        config = sample_finite_model(60, 5)
        net = Network(config, complete_edges(60), FamilyTag("complete"))
        profile = rho_profile(net, bin_width=0.5, d_max=5.0, inner_margin=0.0, min_count=1)
        self.assertTrue(profile.qualifying())
        for b in profile.qualifying():
            self.assertAlmostEqual(b.mean_ratio, 0.0, places=12)

    def test_bins(self):
        net = build_gabriel(sample_finite_model(400, 6))
        profile = rho_profile(net, bin_width=0.5, d_max=4.0, inner_margin=0.1, min_count=20)
        centers = [b.center for b in profile.bins]
        self.assertEqual(len(centers), 9)
        np.testing.assert_allclose(np.diff(centers), 0.5)
        for b in profile.bins:
            if b.count < 20:
                self.assertIsNone(b.mean_ratio)
            else:
                self.assertGreaterEqual(b.mean_ratio, 0.0)
                self.assertGreaterEqual(b.max_ratio, b.mean_ratio)

    def test_invalid_parameters(self):
        net = build_mst(sample_finite_model(20, 1))
        with self.assertRaises(InvalidParameterError):
            rho_profile(net, bin_width=0.0)
        with self.assertRaises(InvalidParameterError):
            rho_profile(net, inner_margin=0.5)
        with self.assertRaises(InvalidParameterError):
            rho_profile(net, d_max=float("inf"))

    def test_disconnected_network_is_infinite(self):
        config = config_from([[0.1, 0.1], [0.3, 0.2], [0.8, 0.9], [0.9, 0.7]], side=1.0)
        net = Network(config, [(0, 1), (2, 3)], FamilyTag("two"))
        params = ProfileParams(bin_width=0.25, d_max=2.0, inner_margin=0.0, min_count=1)
        summary, profile = summarize_with_profile(net, params)
        self.assertTrue(math.isinf(summary.r_tilde))
        self.assertTrue(math.isinf(summary.r_max))
        self.assertTrue(math.isfinite(summary.r_ave))
        self.assertAlmostEqual(summary.unreachable_fraction, 4 / 6)
        self.assertEqual(summary.components, 2)
        self.assertEqual(summary.to_dict()["r_max"], "inf")
        self.assertTrue(any(b.mean_ratio == math.inf for b in profile.qualifying()))

    def test_no_qualifying_bin(self):
        net = build_gabriel(sample_finite_model(50, 7))
        summary = summarize(net, ProfileParams(min_count=10 ** 6))
        self.assertTrue(math.isnan(summary.r_tilde))
        self.assertIsNone(summary.to_dict()["r_tilde"])

    def test_unbounded_suspected(self):
        self.assertTrue(shaped_profile(lambda d: d ** 0.3 - 1.0).unbounded_suspected)
        self.assertFalse(shaped_profile(lambda d: 0.2).unbounded_suspected)
        self.assertFalse(shaped_profile(lambda d: 0.5 / d + 0.1).unbounded_suspected)
        peaked = shaped_profile(lambda d: 0.4 * (d / 2.5) * math.exp(1.0 - d / 2.5))
        self.assertFalse(peaked.unbounded_suspected)
        self.assertFalse(profile_of([0.1, 0.2, 0.3, 0.4, 0.5]).unbounded_suspected)

    def test_convex_route_length_with_falling_tail(self):
        profile = shaped_profile(lambda d: 6.0 / d + 1.5 * d ** 0.22 - 1.0)
        tail = [b.mean_ratio for b in profile.full_bins()][-3:]
        self.assertGreater(tail[0], tail[-1])
        self.assertTrue(profile.unbounded_suspected)

    def test_partial_last_bin_is_ignored(self):
        profile = shaped_profile(lambda d: 50.0 if d == 10.0 else 0.2)
        self.assertEqual(profile.full_bins()[-1].center, 9.5)
        self.assertFalse(profile.unbounded_suspected)

    def test_argmax_and_value_at(self):
        profile = profile_of([None, 0.1, 0.4, 0.2])
        self.assertEqual(profile.argmax_center, 2.0)
        self.assertAlmostEqual(profile.r_tilde, 0.4)
        self.assertEqual(profile.value_at(1.2), 0.1)
        self.assertIsNone(profile.value_at(0.2))
        self.assertIsNone(profile.value_at(50.0))

    def test_profile_csv_shape(self):
        data = profile_of([0.1, None]).to_dict()
        self.assertEqual(data["bins"][1]["mean_ratio"], None)
        self.assertEqual(set(data["bins"][0]), {"d_center", "count", "mean_ratio", "max_ratio"})


class TestSummary(unittest.TestCase):

    def test_invariants(self):
        net = build_gabriel(sample_finite_model(300, 8))
        params = ProfileParams(bin_width=0.5, d_max=5.0, inner_margin=0.1, min_count=1)
        summary, profile = summarize_with_profile(net, params)
        self.assertIsInstance(summary, NetSummary)
        self.assertGreaterEqual(summary.L, 0.0)
        self.assertLessEqual(summary.r_ave, summary.r_max)
        self.assertLessEqual(summary.r_tilde, summary.r_max)
        means = [b.mean_ratio for b in profile.qualifying()]
        self.assertLessEqual(min(means), summary.r_ave_local + 1e-12)
        self.assertGreaterEqual(max(means), summary.r_ave_local - 1e-12)
        self.assertEqual(summary.components, 1)
        self.assertEqual(summary.unreachable_fraction, 0.0)

    def test_subgraph_monotonicity(self):
        config = sample_finite_model(300, 9)
        params = ProfileParams(bin_width=0.5, d_max=5.0, inner_margin=0.1, min_count=1)
        rng = summarize(build_relative_neighborhood(config), params)
        gabriel = summarize(build_gabriel(config), params)
        delaunay = summarize(build_delaunay(config), params)
        self.assertGreaterEqual(rng.r_tilde, gabriel.r_tilde)
        self.assertGreaterEqual(gabriel.r_tilde, delaunay.r_tilde)
        self.assertLessEqual(rng.L, gabriel.L)
        self.assertLessEqual(gabriel.L, delaunay.L)

    def test_planarized_routing(self):
        net = build_hammersley(sample_finite_model(500, 10), 10)
        plain = summarize(net, ProfileParams(inner_margin=0.2, min_count=1))
        flat = summarize(net, ProfileParams(inner_margin=0.2, min_count=1, planarized=True))
        self.assertLessEqual(flat.r_ave, plain.r_ave + 1e-12)
        self.assertGreater(flat.r_ave, 0.7 * plain.r_ave)
        self.assertEqual(flat.n_cities, plain.n_cities)

    def test_to_dict(self):
        data = summarize(build_mst(sample_finite_model(100, 11)), ProfileParams(min_count=5)).to_dict()
        self.assertEqual(data["family"], "mst")
        self.assertEqual(data["components"], 1)
        self.assertIn("unbounded_suspected", data)
        self.assertIs(data["planarized"], False)
        self.assertLess(data["length_rule_ratio"], 0.5)

    def test_length_against_rule_of_thumb(self):
        summary = summarize(build_gabriel(sample_finite_model(2500, 19)), ProfileParams(min_count=5, d_max=2.0))
        self.assertTrue(0.85 < summary.length_rule_ratio < 1.1)


if __name__ == "__main__":
    unittest.main()
