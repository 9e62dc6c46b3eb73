"""Tests for network builders, planarization and line overlays."""

import math
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from builders import (
    FAMILIES,
    build_delaunay,
    build_family,
    build_gabriel,
    build_geometric,
    build_gp,
    build_k_neighbor,
    build_mst,
    build_proximity,
    build_relative_neighborhood,
    clip_line_to_window,
    complete_edges,
    overlay_line_process,
    planarize,
    sample_line_chords,
)
from geometry import sample_finite_model
from metrics import connected_components
from network import FamilyTag, Network, VertexKind
from road_errors import GeneralPositionError, InvalidParameterError
from templates import beta_template
from tests.oracles import (
    beta_oracle,
    config_from,
    gabriel_oracle,
    geometric_oracle,
    gp_oracle,
    k_neighbor_oracle,
    mst_oracle,
    rng_oracle,
)

ORACLE_SEEDS = range(500, 550)


def configs(n: int, seeds=ORACLE_SEEDS):
    for seed in seeds:
        yield seed, sample_finite_model(n, seed)


class TestNeighborhoodFamilies(unittest.TestCase):

    def test_geometric_matches_pair_scan(self):
        config = sample_finite_model(200, 1)
        net = build_geometric(config, 1.0)
        self.assertEqual(net.city_edge_set(), geometric_oracle(config.points, 1.0))
        self.assertEqual(net.family.label, "geometric")

    def test_k_neighbor_matches_sort(self):
        config = sample_finite_model(200, 2)
        net = build_k_neighbor(config, 3)
        self.assertEqual(net.city_edge_set(), k_neighbor_oracle(config.points, 3))
        self.assertTrue(np.all(net.degrees >= 3))

    def test_k_neighbor_preconditions(self):
        config = sample_finite_model(10, 2)
        with self.assertRaises(InvalidParameterError):
            build_k_neighbor(config, 10)
        with self.assertRaises(InvalidParameterError):
            build_k_neighbor(config, 0)

    def test_geometric_radius_must_be_positive(self):
        with self.assertRaises(InvalidParameterError):
            build_geometric(sample_finite_model(10, 2), 0.0)

    def test_edge_lengths_are_euclidean(self):
        net = build_geometric(sample_finite_model(200, 3), 1.5)
        for (u, v), length in zip(net.edges, net.lengths):
            self.assertAlmostEqual(length, math.dist(net.positions[u], net.positions[v]), delta=1e-9)
            self.assertTrue(net.has_edge(int(v), int(u)))
        self.assertFalse(net.has_edge(0, 0))


class TestNestedFamilies(unittest.TestCase):

    def test_mst_matches_bottleneck_oracle(self):
        for seed, config in configs(64):
            net = build_mst(config)
            self.assertEqual(net.n_edges, config.n - 1)
            self.assertEqual(net.city_edge_set(), mst_oracle(config.points), msg=f"seed={seed}")

    def test_mst_tie_is_reported(self):
        config = config_from([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], side=2.0)
        with self.assertRaises(GeneralPositionError):
            build_mst(config)

    def test_tiny_configurations(self):
        self.assertEqual(build_mst(sample_finite_model(1, 1)).n_edges, 0)
        self.assertEqual(build_mst(sample_finite_model(2, 1)).n_edges, 1)
        self.assertEqual(build_gabriel(sample_finite_model(2, 1)).n_edges, 1)

    def test_gabriel_matches_oracle(self):
        for seed, config in configs(64):
            self.assertEqual(build_gabriel(config).city_edge_set(), gabriel_oracle(config.points),
                             msg=f"seed={seed}")

    def test_rng_matches_oracle(self):
        for seed, config in configs(64):
            self.assertEqual(build_relative_neighborhood(config).city_edge_set(), rng_oracle(config.points),
                             msg=f"seed={seed}")

    def test_beta_skeleton_matches_oracle(self):
        for beta in (0.6, 0.9, 1.3, 1.7):
            for seed, config in configs(48, range(700, 710)):
                net = build_proximity(config, beta_template(beta))
                self.assertEqual(net.city_edge_set(), beta_oracle(config.points, beta),
                                 msg=f"beta={beta} seed={seed}")

    def test_nesting_chain(self):
        for seed, config in configs(64):
            mst = build_mst(config).city_edge_set()
            rng = build_relative_neighborhood(config).city_edge_set()
            gabriel = build_gabriel(config).city_edge_set()
            delaunay = build_delaunay(config).city_edge_set()
            self.assertTrue(mst <= rng <= gabriel <= delaunay, msg=f"seed={seed}")

    def test_monotone_in_beta(self):
        config = sample_finite_model(300, 8)
        betas = (0.5, 0.8, 1.0, 1.25, 1.5, 2.0)
        sets = [build_proximity(config, beta_template(b)).city_edge_set() for b in betas]
        for looser, tighter in zip(sets, sets[1:]):
            self.assertTrue(tighter <= looser)

    def test_connected(self):
        config = sample_finite_model(400, 9)
        for net in (build_mst(config), build_relative_neighborhood(config), build_gabriel(config),
                    build_delaunay(config)):
            self.assertEqual(connected_components(net)[0], 1, msg=net.family.describe())

    def test_family_tags(self):
        config = sample_finite_model(50, 1)
        self.assertEqual(build_gabriel(config).family.to_dict(), {"label": "beta-skeleton", "params": {"beta": 1.0}})
        self.assertEqual(build_mst(config).family.describe(), "mst")


class TestGp(unittest.TestCase):

    def test_p1_is_complete(self):
        config = sample_finite_model(20, 4)
        self.assertEqual(build_gp(config, 1.0).n_edges, 20 * 19 // 2)

    def test_matches_shortest_path_oracle(self):
        for p in (1.5, 2.0, 3.0):
            for seed, config in configs(40, range(600, 615)):
                self.assertEqual(build_gp(config, p).city_edge_set(), gp_oracle(config.points, p),
                                 msg=f"p={p} seed={seed}")

    def test_g2_inside_gabriel(self):
        for seed, config in configs(64, range(620, 630)):
            self.assertTrue(build_gp(config, 2.0).city_edge_set() <= build_gabriel(config).city_edge_set())

    def test_nonincreasing_in_p(self):
        config = sample_finite_model(64, 11)
        sets = [build_gp(config, p).city_edge_set() for p in (1.5, 2.0, 4.0, 32.0)]
        for looser, tighter in zip(sets, sets[1:]):
            self.assertTrue(tighter <= looser)

    def test_large_p_approaches_mst(self):
        for seed, config in configs(64, range(640, 645)):
            gp = build_gp(config, 32.0).city_edge_set()
            self.assertTrue(build_mst(config).city_edge_set() <= gp)
            self.assertLessEqual(len(gp), 1.25 * (config.n - 1))

    def test_p_below_one_rejected(self):
        with self.assertRaises(InvalidParameterError):
            build_gp(sample_finite_model(10, 1), 0.5)


class TestPlanarize(unittest.TestCase):

    def test_two_crossing_segments(self):
        config = config_from([[0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0]], side=2.0)
        net = Network(config, [(0, 1), (2, 3)], FamilyTag("test"))
        flat = planarize(net)
        self.assertEqual(flat.n_edges, 4)
        self.assertEqual(flat.n_vertices, 5)
        self.assertEqual(flat.kinds[4], VertexKind.JUNCTION)
        np.testing.assert_allclose(flat.positions[4], [1.0, 1.0])
        self.assertTrue(np.all(flat.degrees[:4] == 1))
        self.assertEqual(flat.degrees[4], 4)
        self.assertAlmostEqual(flat.total_length, net.total_length, delta=1e-9)
        self.assertTrue(flat.family.params["planarized"])

    def test_gabriel_is_planar(self):
        net = build_gabriel(sample_finite_model(500, 6))
        self.assertIs(planarize(net), net)

    def test_square_skeleton_with_crossing_diagonals(self):
        config = config_from([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], side=1.0)
        net = build_proximity(config, beta_template(0.9))
        self.assertEqual(net.n_edges, 6)
        flat = planarize(net)
        self.assertEqual(flat.n_edges, 8)
        self.assertEqual(flat.n_vertices, 5)
        self.assertIs(planarize(flat), flat)

    def test_idempotent_on_crossing_skeleton(self):
        net = build_proximity(sample_finite_model(64, 13), beta_template(0.7))
        flat = planarize(net)
        self.assertAlmostEqual(flat.total_length, net.total_length, delta=1e-9)
        self.assertIs(planarize(flat), flat)


class TestLineOverlay(unittest.TestCase):

    def test_horizontal_chord(self):
        a, b = clip_line_to_window(math.pi / 2.0, 0.0, 2.0)
        ends = sorted([tuple(np.round(a, 12)), tuple(np.round(b, 12))])
        self.assertEqual(ends, [(0.0, 1.0), (2.0, 1.0)])

    def test_line_missing_window(self):
        self.assertIsNone(clip_line_to_window(0.0, 2.0, 2.0))

    def test_zero_intensity_returns_base(self):
        base = build_mst(sample_finite_model(100, 1))
        self.assertIs(overlay_line_process(base, 0.0, 5), base)

    def test_negative_intensity_rejected(self):
        base = build_mst(sample_finite_model(10, 1))
        with self.assertRaises(InvalidParameterError):
            overlay_line_process(base, -0.1, 5)

    def test_overlay_structure(self):
        config = sample_finite_model(100, 21)
        base = build_mst(config)
        net = overlay_line_process(base, 1.0, 17)
        side = config.window.side
        chords = sample_line_chords(side, 1.0, 17)
        self.assertGreater(len(chords), 0)

        anchors = [v for v, k in enumerate(net.kinds) if k == VertexKind.BOUNDARY_ANCHOR]
        self.assertEqual(len(anchors), 2 * len(chords))
        for v in anchors:
            x, y = net.positions[v]
            on_edge = min(abs(x), abs(y), abs(side - x), abs(side - y))
            self.assertLess(on_edge, 1e-9)

        added = sum(math.dist(a, b) for a, b in chords)
        self.assertAlmostEqual(net.total_length, base.total_length + added, delta=1e-9)
        self.assertEqual(connected_components(net)[0], 1)
        self.assertEqual(net.family.label, "mst+lines")

    def test_overlay_has_no_chord_crossings_left(self):
        base = build_mst(sample_finite_model(100, 22))
        net = overlay_line_process(base, 0.4, 3)
        self.assertIs(planarize(net), net)

    def test_overlay_is_deterministic(self):
        base = build_mst(sample_finite_model(100, 23))
        a = overlay_line_process(base, 0.2, 9)
        b = overlay_line_process(base, 0.2, 9)
        np.testing.assert_array_equal(a.edges, b.edges)
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_added_length_follows_intensity(self):
        side, intensity = 10.0, 0.5
        totals = [sum(math.dist(a, b) for a, b in sample_line_chords(side, intensity, seed)) / side ** 2
                  for seed in range(400)]
        self.assertLess(abs(np.mean(totals) - intensity), 0.1 * intensity)


class TestDispatch(unittest.TestCase):

    def test_every_family_builds(self):
        config = sample_finite_model(60, 31)
        params = {"geometric": {"c": 1.0}, "k-neighbor": {"K": 3}, "beta": {"beta": 1.5}, "gp": {"p": 2.0}}
        for family in FAMILIES:
            net = build_family(config, family, params.get(family), seed=4)
            self.assertEqual(net.n_cities, 60, msg=family)

    def test_unknown_family(self):
        with self.assertRaises(InvalidParameterError):
            build_family(sample_finite_model(10, 1), "steiner")

    def test_hammersley_needs_seed(self):
        with self.assertRaises(InvalidParameterError):
            build_family(sample_finite_model(10, 1), "hammersley")

    def test_complete_edges(self):
        self.assertEqual(len(complete_edges(5)), 10)
        self.assertEqual(len(complete_edges(1)), 0)


if __name__ == "__main__":
    unittest.main()
