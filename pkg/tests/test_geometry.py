"""Tests for point sampling, windows, predicates and the grid index."""

import math
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from geometry import (
    GridIndex,
    PointConfig,
    SamplingModel,
    Window,
    crossing_params,
    derive_seed,
    enforce_general_position,
    find_general_position_violations,
    grid_index,
    incircle,
    lens_area,
    make_rng,
    orient2d,
    sample_finite_model,
    sample_poisson,
    segments_cross,
)
from road_errors import InvalidParameterError
from tests.oracles import lens_area_oracle

LUNE_AREA = 2.0 * math.pi / 3.0 - math.sqrt(3.0) / 2.0


class TestWindow(unittest.TestCase):

    def test_area_and_diameter(self):
        w = Window(50.0)
        self.assertEqual(w.area, 2500.0)
        self.assertAlmostEqual(w.diameter, 50.0 * math.sqrt(2.0))
        self.assertEqual(w.center, (25.0, 25.0))

    def test_side_must_be_positive(self):
        with self.assertRaises(InvalidParameterError):
            Window(0.0)
        with self.assertRaises(InvalidParameterError):
            Window(float("inf"))

    def test_inner_window(self):
        w = Window(10.0)
        self.assertEqual(w.inner_bounds(0.1), (1.0, 9.0))
        self.assertAlmostEqual(w.inner_area(0.2), 36.0)
        mask = w.inner_mask(np.array([[1.0, 1.0], [0.5, 5.0], [9.0, 9.0]]), 0.1)
        self.assertEqual(mask.tolist(), [True, False, True])

    def test_inner_margin_out_of_range(self):
        with self.assertRaises(InvalidParameterError) as ctx:
            Window(10.0).inner_bounds(0.5)
        self.assertEqual(ctx.exception.parameter, "inner_margin")


class TestPointConfig(unittest.TestCase):

    def test_points_are_read_only(self):
        config = sample_finite_model(10, 3)
        self.assertFalse(config.points.flags.writeable)
        with self.assertRaises(ValueError):
            config.points[0, 0] = 1.0

    def test_rejects_points_outside_window(self):
        with self.assertRaises(InvalidParameterError):
            PointConfig(Window(1.0), np.array([[0.5, 1.5]]), 0, SamplingModel.FINITE_UNIFORM)

    def test_rejects_non_finite_points(self):
        with self.assertRaises(InvalidParameterError):
            PointConfig(Window(1.0), np.array([[0.5, np.nan]]), 0, SamplingModel.FINITE_UNIFORM)

    def test_hash_depends_on_seed_and_coordinates(self):
        a = sample_finite_model(50, 1)
        b = sample_finite_model(50, 1)
        c = sample_finite_model(50, 2)
        self.assertEqual(a.config_hash(), b.config_hash())
        self.assertNotEqual(a.config_hash(), c.config_hash())

    def test_sidecar(self):
        config = sample_finite_model(25, 9)
        self.assertEqual(config.sidecar(), {"model": "finite-uniform", "n": 25, "side": 5.0, "seed": 9})

    def test_iter_points(self):
        config = sample_finite_model(5, 4)
        pts = list(config.iter_points())
        self.assertEqual(len(pts), 5)
        self.assertEqual(pts[2], config.point(2))


class TestSeeds(unittest.TestCase):

    def test_derive_seed_is_deterministic(self):
        self.assertEqual(derive_seed(7, 3, "points"), derive_seed(7, 3, "points"))

    def test_derive_seed_separates_purposes_and_replicates(self):
        seeds = {derive_seed(7, 0, "points"), derive_seed(7, 1, "points"), derive_seed(7, 0, "lines")}
        self.assertEqual(len(seeds), 3)

    def test_derive_seed_is_64_bit(self):
        for rep in range(20):
            self.assertLess(derive_seed(2 ** 64 - 1, rep, "x"), 2 ** 64)

    def test_make_rng_streams(self):
        a = make_rng(11, "points").uniform(size=5)
        b = make_rng(11, "points").uniform(size=5)
        c = make_rng(11, "lines").uniform(size=5)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))


class TestSampling(unittest.TestCase):

    def test_single_city(self):
        config = sample_finite_model(1, 123)
        self.assertEqual(config.n, 1)
        self.assertEqual(config.window.side, 1.0)
        self.assertTrue(np.all((config.points >= 0) & (config.points <= 1)))

    def test_finite_model_is_deterministic(self):
        a = sample_finite_model(2500, 42)
        b = sample_finite_model(2500, 42)
        np.testing.assert_array_equal(a.points, b.points)
        self.assertEqual(a.n, 2500)
        self.assertEqual(a.window.side, 50.0)

    def test_finite_model_rejects_bad_n(self):
        with self.assertRaises(InvalidParameterError):
            sample_finite_model(0, 1)
        with self.assertRaises(InvalidParameterError):
            sample_finite_model(2.5, 1)

    def test_left_half_count(self):
        config = sample_finite_model(10000, 2024)
        left = int(np.sum(config.points[:, 0] < config.window.side / 2.0))
        self.assertLessEqual(abs(left - 5000), 3 * math.sqrt(2500))

    def test_finite_model_in_general_position(self):
        config = sample_finite_model(2500, 5)
        self.assertEqual(find_general_position_violations(config.points), set())

    def test_poisson_is_deterministic(self):
        a = sample_poisson(Window(10.0), 1.0, 8)
        b = sample_poisson(Window(10.0), 1.0, 8)
        np.testing.assert_array_equal(a.points, b.points)
        self.assertEqual(a.model, SamplingModel.POISSON)

    def test_poisson_tiny_rate(self):
        config = sample_poisson(Window(1.0), 1e-9, 3)
        self.assertEqual(config.n, 0)

    def test_poisson_rate_must_be_positive(self):
        with self.assertRaises(InvalidParameterError):
            sample_poisson(Window(1.0), 0.0, 3)

    def test_poisson_moments(self):
        counts = np.array([sample_poisson(Window(10.0), 1.0, seed).n for seed in range(1000)])
        self.assertLess(abs(counts.mean() - 100.0), 1.5)
        self.assertLess(abs(counts.var(ddof=1) - 100.0), 15.0)

    @unittest.skipUnless(os.getenv("ROADNET_SLOW_TESTS"), "slow Monte Carlo check")
    def test_poisson_moments_large_window(self):
        counts = np.array([sample_poisson(Window(100.0), 1.0, seed).n for seed in range(1000)])
        self.assertLess(abs(counts.mean() - 10000.0), 15.0)
        self.assertLess(abs(counts.var(ddof=1) / 10000.0 - 1.0), 0.15)


class TestGeneralPosition(unittest.TestCase):

    def test_coordinate_tie_flags_later_point(self):
        pts = np.array([[0.1, 0.2], [0.1, 0.5], [0.7, 0.9]])
        self.assertEqual(find_general_position_violations(pts), {1})

    def test_distance_tie_flagged(self):
        pts = np.array([[0.1, 0.2], [0.4, 0.6], [0.95, 0.33], [0.65, 0.73]])
        bad = find_general_position_violations(pts)
        self.assertTrue(bad)
        self.assertTrue(bad <= {1, 3})

    def test_enforce_redraws_offenders(self):
        pts = np.array([[0.1, 0.2], [0.1, 0.2], [0.7, 0.9]])
        fixed = enforce_general_position(pts, Window(1.0), make_rng(1, "test"))
        self.assertEqual(find_general_position_violations(fixed), set())
        np.testing.assert_array_equal(fixed[0], pts[0])
        np.testing.assert_array_equal(fixed[2], pts[2])

    def test_tie_through_flagged_point_spares_partner(self):
        pts = np.array([[0.1, 0.2], [0.1, 0.2], [0.7, 0.9]])
        self.assertEqual(find_general_position_violations(pts), {1})


class TestLensArea(unittest.TestCase):

    def test_coincident_discs(self):
        self.assertAlmostEqual(lens_area(2.0, 2.0, 0.0), 4.0 * math.pi)

    def test_tangent_discs(self):
        self.assertEqual(lens_area(1.0, 1.0, 2.0), 0.0)

    def test_unit_lune(self):
        self.assertAlmostEqual(lens_area(1.0, 1.0, 1.0), LUNE_AREA, places=12)
        self.assertAlmostEqual(LUNE_AREA, 1.22837, places=5)

    def test_contained_disc(self):
        self.assertAlmostEqual(lens_area(3.0, 1.0, 1.5), math.pi)

    def test_invalid_inputs(self):
        with self.assertRaises(InvalidParameterError):
            lens_area(0.0, 1.0, 0.5)
        with self.assertRaises(InvalidParameterError):
            lens_area(1.0, 1.0, -0.5)

    def test_symmetric_and_nonincreasing(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            r1, r2 = rng.uniform(0.1, 2.0, size=2)
            d1, d2 = np.sort(rng.uniform(0.0, r1 + r2, size=2))
            self.assertAlmostEqual(lens_area(r1, r2, d1), lens_area(r2, r1, d1), places=12)
            self.assertGreaterEqual(lens_area(r1, r2, d1) + 1e-12, lens_area(r1, r2, d2))

    def test_agrees_with_quadrature(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            r1, r2 = rng.uniform(0.2, 2.0, size=2)
            d = rng.uniform(0.0, 0.9 * (r1 + r2))
            exact = lens_area(r1, r2, d)
            self.assertLess(abs(exact - lens_area_oracle(r1, r2, d)), 1e-6 * exact)


class TestPredicates(unittest.TestCase):

    def test_orient2d(self):
        self.assertEqual(orient2d((0, 0), (1, 0), (0, 1)), 1)
        self.assertEqual(orient2d((0, 0), (0, 1), (1, 0)), -1)
        self.assertEqual(orient2d((0, 0), (1, 1), (2, 2)), 0)

    def test_orient2d_exact_fallback(self):
        a, b, c = (0.1, 0.1), (0.2, 0.2), (0.1 + 0.2, 0.1 + 0.2)
        self.assertEqual(orient2d(a, b, c), 0)
        self.assertEqual(orient2d(a, b, (c[0], np.nextafter(c[1], 1.0))), 1)

    def test_incircle(self):
        a, b, c = (0.0, 0.0), (1.0, 0.0), (0.0, 1.0)
        self.assertEqual(incircle(a, b, c, (0.5, 0.5)), 1)
        self.assertEqual(incircle(a, b, c, (2.0, 2.0)), -1)
        self.assertEqual(incircle(a, b, c, (1.0, 1.0)), 0)

    def test_segments_cross(self):
        self.assertTrue(segments_cross((0, 0), (1, 1), (0, 1), (1, 0)))
        self.assertFalse(segments_cross((0, 0), (1, 0), (1, 0), (1, 1)))
        self.assertFalse(segments_cross((0, 0), (2, 0), (1, 0), (1, 1)))
        self.assertFalse(segments_cross((0, 0), (1, 0), (0, 1), (1, 1)))

    def test_crossing_params(self):
        t, u = crossing_params((0, 0), (2, 2), (0, 2), (2, 0))
        self.assertAlmostEqual(t, 0.5)
        self.assertAlmostEqual(u, 0.5)


class TestGridIndex(unittest.TestCase):

    def setUp(self):
        self.config = sample_finite_model(500, 77)
        self.index = grid_index(self.config)

    def test_whole_window(self):
        side = self.config.window.side
        self.assertEqual(len(self.index.query(0, 0, side, side)), 500)

    def test_rectangle_outside_window(self):
        self.assertEqual(len(self.index.query(-5, -5, -1, -1)), 0)
        self.assertEqual(len(self.index.query(100, 100, 101, 101)), 0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        side = self.config.window.side
        pts = self.config.points
        for _ in range(100):
            x0, x1 = np.sort(rng.uniform(-2, side + 2, size=2))
            y0, y1 = np.sort(rng.uniform(-2, side + 2, size=2))
            expected = np.nonzero((pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1))[0]
            np.testing.assert_array_equal(self.index.query(x0, y0, x1, y1), expected)

    def test_disc_query(self):
        pts = self.config.points
        cx, cy, r = 10.0, 12.0, 3.0
        expected = np.nonzero(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) < r)[0]
        np.testing.assert_array_equal(np.sort(self.index.query_disc(cx, cy, r)), expected)

    def test_cell_side_must_be_positive(self):
        with self.assertRaises(InvalidParameterError):
            GridIndex(self.config.points, self.config.window.side, 0.0)


if __name__ == "__main__":
    unittest.main()
