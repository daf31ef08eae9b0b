import math
import unittest

import numpy as np
from pandas.testing import assert_frame_equal

from test_utils.decorators import number, slow
from test_utils.timeout import timeout

from capacity_oracle import (
    ClosedFormCapacity,
    DiscretizedGaussian,
    InputGrid,
    RotatedPsk,
    best_rotation,
    blahut_arimoto,
    default_families,
    mass_near_optimum,
    rate_sweep,
)
from errors import DomainError
from info_metrics import InputDistribution, capacity, mutual_information, psk_input, symmetrize
from quantizer import ChannelParams, ComplexPoint, PhaseQuantizer


class TestInputGrid(unittest.TestCase):

    @number("3.1")
    def test_grid(self):
        grid = InputGrid((0.0, 2.0, 1.0, 1.0), (7.0, -1.0, 0.5))
        self.assertTrue(grid.includes_origin)
        self.assertEqual(grid.radii, (1.0, 2.0))
        self.assertEqual(len(grid.phases), 3)
        self.assertTrue(all(0 <= p < 2 * math.pi for p in grid.phases))
        self.assertEqual(len(grid), 7)
        points = grid.points()
        self.assertEqual(len(points), 7)
        self.assertEqual(points[0].amplitude, 0.0)
        self.assertEqual([p.amplitude for p in points[1:4]], [1.0] * 3)
        self.assertAlmostEqual(grid.radius_step, 1.0)

        self.assertRaises(DomainError, lambda: InputGrid((0.0,), (0.0,)))
        self.assertRaises(DomainError, lambda: InputGrid((1.0,), ()))
        self.assertRaises(DomainError, lambda: InputGrid((-1.0,), (0.0,)))

    @number("3.2")
    def test_aligned(self):
        q = PhaseQuantizer(2)
        grid = InputGrid.aligned(q, 4.0)
        self.assertTrue(grid.includes_origin)
        self.assertEqual(len(grid.radii), 7)
        self.assertAlmostEqual(grid.radii[-1], 1.75 * 2.0)
        self.assertAlmostEqual(grid.radius_step, 0.25 * 2.0)
        self.assertAlmostEqual(grid.phase_step, 2 * math.pi / 24)
        for k in range(4):
            self.assertTrue(any(abs(math.remainder(p - q.bisector(k), 2 * math.pi)) < 1e-12 for p in grid.phases))
        self.assertEqual(len(grid), 7 * 24 + 1)
        self.assertRaises(DomainError, lambda: InputGrid.aligned(q, 0.0))


class TestBlahutArimoto(unittest.TestCase):

    @number("3.3")
    def test_single_orbit(self):
        for bits, snr in ((1, 1.0), (2, 1.0), (3, 4.0)):
            q = PhaseQuantizer(bits)
            grid = InputGrid((math.sqrt(snr),), tuple(q.bisector(k) for k in range(q.sectors)))
            result = blahut_arimoto(q, grid, snr)
            self.assertTrue(result.converged)
            self.assertTrue(result.feasible)
            np.testing.assert_allclose(result.weights, [1 / q.sectors] * q.sectors, atol=1e-12)
            self.assertAlmostEqual(result.rate, capacity(ChannelParams(snr, bits)), delta=1e-6)

    @number("3.4")
    def test_aligned_oracle(self):
        q = PhaseQuantizer(2)
        grid = InputGrid.aligned(q, 1.0)
        result = blahut_arimoto(q, grid, 1.0)
        self.assertTrue(result.converged)
        self.assertTrue(result.feasible)
        self.assertAlmostEqual(result.weights.sum(), 1.0, delta=1e-12)
        self.assertTrue(np.all(result.weights >= 0))
        self.assertLessEqual(result.power, 1.0 * (1 + 1e-6))
        self.assertGreaterEqual(result.multiplier, 0.0)
        self.assertAlmostEqual(result.rate, capacity(ChannelParams(1.0, 2)), delta=1e-3)
        self.assertGreaterEqual(mass_near_optimum(result, q, grid, 1.0), 0.99)
        history = result.bound_history
        self.assertGreater(len(history), 0)
        self.assertTrue(all(b >= a - 1e-12 for a, b in zip(history, history[1:])))

    @number("3.5")
    def test_fixed_point_stability(self):
        q = PhaseQuantizer(1)
        grid = InputGrid.aligned(q, 0.5, n_phases=12, n_radii=5)
        first = blahut_arimoto(q, grid, 0.5, tol=1e-7, max_iter=10000)
        self.assertTrue(first.converged)
        second = blahut_arimoto(q, grid, 0.5, tol=1e-7, max_iter=20000)
        self.assertTrue(second.converged)
        self.assertAlmostEqual(first.rate, second.rate, delta=1e-7)

    @number("3.15")
    def test_budget_between_grid_radii(self):
        # sqrt(0.5) falls between the grid radii 0.619 and 0.928
        q = PhaseQuantizer(1)
        grid = InputGrid.aligned(q, 0.5, n_phases=12, n_radii=5)
        inner, outer = grid.radii[1], grid.radii[2]
        self.assertTrue(inner ** 2 < 0.5 < outer ** 2)
        share = (outer ** 2 - 0.5) / (outer ** 2 - inner ** 2)
        mix = InputDistribution.from_points(
            [ComplexPoint(r, q.bisector(k)) for r in (inner, outer) for k in range(2)],
            [share / 2, share / 2, (1 - share) / 2, (1 - share) / 2],
        )
        self.assertAlmostEqual(mix.power, 0.5, delta=1e-12)
        by_hand = mutual_information(q, mix).mutual_information

        result = blahut_arimoto(q, grid, 0.5, tol=1e-7)
        self.assertTrue(result.converged)
        self.assertGreaterEqual(result.rate, by_hand - 1e-7)
        self.assertLessEqual(result.rate, capacity(ChannelParams(0.5, 1)))
        self.assertAlmostEqual(result.power, 0.5, delta=1e-9)
        self.assertGreater(result.multiplier, 0.0)
        history = result.bound_history
        self.assertTrue(all(b >= a - 1e-12 for a, b in zip(history, history[1:])))

    @number("3.6")
    def test_non_convergence_and_infeasibility(self):
        q = PhaseQuantizer(2)
        grid = InputGrid.aligned(q, 1.0, n_phases=8, n_radii=4)
        with self.assertLogs("capacity_oracle", level="WARNING"):
            result = blahut_arimoto(q, grid, 1.0, tol=1e-12, max_iter=2)
        self.assertFalse(result.converged)

        far = InputGrid((2.0,), (q.bisector(0),))
        with self.assertLogs("capacity_oracle", level="WARNING"):
            result = blahut_arimoto(q, far, 1.0)
        self.assertFalse(result.feasible)
        self.assertAlmostEqual(result.power, 4.0)
        self.assertEqual(result.multiplier, math.inf)

        self.assertRaises(DomainError, lambda: blahut_arimoto(q, grid, 0.0))
        self.assertRaises(DomainError, lambda: blahut_arimoto(q, grid, 1.0, tol=0.0))

    @number("3.7")
    def test_symmetrize_at_optimum(self):
        q = PhaseQuantizer(2)
        grid = InputGrid.aligned(q, 4.0, n_phases=16, n_radii=5)
        result = blahut_arimoto(q, grid, 4.0)
        F = result.distribution()
        before = mutual_information(q, F).mutual_information
        after = mutual_information(q, symmetrize(q, F)).mutual_information
        self.assertGreaterEqual(after, before - 1e-9)
        self.assertAlmostEqual(before, result.rate, delta=1e-9)


class TestRotation(unittest.TestCase):

    @number("3.8")
    def test_bisector_is_optimal(self):
        for bits, snr in ((1, 1.0), (2, 4.0), (3, 10.0)):
            q = PhaseQuantizer(bits)
            theta, rate = best_rotation(q, q.sectors, snr)
            self.assertLess(abs(math.remainder(theta - q.bisector(0), q.width)), 1e-6)
            self.assertAlmostEqual(rate, capacity(ChannelParams(snr, bits)), delta=1e-9)

    @number("3.9")
    def test_other_orders(self):
        q = PhaseQuantizer(3)
        for snr in (1.0, 10.0, 100.0):
            theta, rate = best_rotation(q, 16, snr)
            self.assertLess(rate, capacity(ChannelParams(snr, 3)))
            self.assertTrue(0 <= theta < 2 * math.pi / 16)
        self.assertEqual(best_rotation(q, 8, 0.0)[1], 0.0)
        self.assertRaises(DomainError, lambda: best_rotation(q, 1, 1.0))

    @number("3.10")
    def test_rotation_periodicity(self):
        q = PhaseQuantizer(2)
        for theta in (0.1, 0.6, 1.3):
            rate = mutual_information(q, psk_input(8, 2.0, theta)).mutual_information
            shifted = mutual_information(q, psk_input(8, 2.0, theta + q.width)).mutual_information
            self.assertAlmostEqual(rate, shifted, delta=1e-9)


class TestRateSweep(unittest.TestCase):

    @number("3.11")
    def test_sweep(self):
        q = PhaseQuantizer(2)
        families = [RotatedPsk(4), DiscretizedGaussian(8, 8), ClosedFormCapacity()]
        grid = [-5.0, 0.0, 10.0]
        frame = rate_sweep(q, families, grid)
        self.assertEqual(list(frame.columns), ["snr_db", "family", "rate_bits", "theta_star"])
        self.assertEqual(list(frame.family[:3]), ["4-PSK", "gaussian", "capacity"])
        self.assertEqual(len(frame), 9)
        self.assertTrue((frame.rate_bits <= 2).all())
        for family, rows in frame.groupby("family"):
            self.assertTrue(rows.rate_bits.is_monotonic_increasing, family)
        psk = frame[frame.family == "4-PSK"].rate_bits.to_numpy()
        cap = frame[frame.family == "capacity"].rate_bits.to_numpy()
        np.testing.assert_allclose(psk, cap, atol=1e-9)
        assert_frame_equal(frame, rate_sweep(q, families, grid, workers=3))
        self.assertRaises(DomainError, lambda: rate_sweep(q, families, [math.inf]))

    @number("3.12")
    def test_default_families(self):
        names = [f.name for f in default_families(PhaseQuantizer(3))]
        self.assertEqual(names, ["4-PSK", "8-PSK", "16-PSK", "256-PSK", "gaussian", "capacity"])
        names = [f.name for f in default_families(PhaseQuantizer(1))]
        self.assertEqual(names, ["2-PSK", "4-PSK", "256-PSK", "gaussian", "capacity"])

    @number("3.13")
    @slow()
    @timeout(600)
    def test_oracle_acceptance(self):
        for bits in (1, 2, 3):
            q = PhaseQuantizer(bits)
            for snr in (0.5, 1.0, 4.0, 10.0):
                grid = InputGrid.aligned(q, snr)
                result = blahut_arimoto(q, grid, snr)
                self.assertAlmostEqual(result.rate, capacity(ChannelParams(snr, bits)), delta=1e-3)
                self.assertGreaterEqual(mass_near_optimum(result, q, grid, snr), 0.99)

    @number("3.14")
    @slow()
    @timeout(900)
    def test_rate_comparison(self):
        q = PhaseQuantizer(3)
        frame = rate_sweep(q, default_families(q), np.arange(-10.0, 31.0, 5.0), workers=4)
        table = frame.pivot(index="snr_db", columns="family", values="rate_bits")
        for other in ("4-PSK", "16-PSK", "256-PSK", "gaussian"):
            self.assertTrue((table["8-PSK"] >= table[other] - 1e-12).all(), other)
        np.testing.assert_allclose(table["8-PSK"], table["capacity"], atol=1e-9)
        self.assertTrue((table["gaussian"] < table["8-PSK"]).all())
