import math
import unittest

import numpy as np

from test_utils.decorators import number, slow
from test_utils.timeout import timeout

from algorithms.quadrature import adaptive_gauss_legendre
from errors import DomainError, UndefinedPhaseError
from info_metrics import cond_entropy_point, entropy_bits
from quantizer import (
    ChannelParams,
    ComplexPoint,
    PhaseQuantizer,
    angular_phase_pdf,
    mc_transition_oracle,
    oracle_standard_error,
    sector_of,
    transition_prob,
    transition_row,
)
from serialize import read_golden


class TestQuantizer(unittest.TestCase):

    @number("1.1")
    def test_sector_of(self):
        self.assertEqual(sector_of(complex(math.cos(math.pi / 4), math.sin(math.pi / 4)), PhaseQuantizer(2)), 0)
        self.assertEqual(sector_of(complex(-1, 0), PhaseQuantizer(1)), 1)
        self.assertEqual(sector_of(complex(math.cos(-1e-12), math.sin(-1e-12)), PhaseQuantizer(3)), 7)
        self.assertEqual(sector_of(1j, PhaseQuantizer(2)), 1)
        self.assertRaises(UndefinedPhaseError, lambda: sector_of(0j, PhaseQuantizer(2)))

    @number("1.2")
    def test_geometry(self):
        q = PhaseQuantizer(3)
        self.assertEqual(q.sectors, 8)
        self.assertAlmostEqual(q.bisector(0), math.pi / 8)
        self.assertAlmostEqual(q.bisector(5), 2 * math.pi * 5.5 / 8)
        self.assertEqual([q.reflect_about_bisector(y) for y in range(8)], [0, 7, 6, 5, 4, 3, 2, 1])
        self.assertEqual([q.reflect_about_zero(y) for y in range(8)], [7, 6, 5, 4, 3, 2, 1, 0])
        for bits in (0, -1, 1.5, True):
            self.assertRaises(DomainError, lambda: PhaseQuantizer(bits))
        self.assertRaises(DomainError, lambda: q.check_sector(8))

    @number("1.3")
    def test_points_and_params(self):
        point = ComplexPoint(2.0, -math.pi / 2)
        self.assertAlmostEqual(point.phase, 3 * math.pi / 2)
        self.assertAlmostEqual(point.alpha, 4.0)
        self.assertEqual(ComplexPoint(1.0, -1e-300).phase, 0.0)
        self.assertAlmostEqual(ComplexPoint.from_complex(1j).phase, math.pi / 2)
        self.assertRaises(DomainError, lambda: ComplexPoint(-1.0))
        self.assertRaises(DomainError, lambda: ComplexPoint.from_alpha(-0.5, 0.0))

        params = ChannelParams.from_physical(power=2.0, bits=3, los_gain=2j, noise_scale=0.5)
        self.assertAlmostEqual(params.snr, 4 * 2.0 / 0.25)
        self.assertAlmostEqual(params.physical_power, 2.0)
        self.assertEqual(params.quantizer, PhaseQuantizer(3))
        self.assertRaises(DomainError, lambda: ChannelParams(-1.0, 2))
        self.assertRaises(DomainError, lambda: ChannelParams(1.0, 2, noise_scale=0.0))

    @number("1.4")
    def test_phase_density(self):
        for phi in (-2.0, 0.0, 1.0, 3.0):
            self.assertAlmostEqual(angular_phase_pdf(0.0, phi), 1 / (2 * math.pi), places=15)
        self.assertAlmostEqual(angular_phase_pdf(4.0, 0.7), angular_phase_pdf(4.0, -0.7), places=15)
        self.assertRaises(DomainError, lambda: angular_phase_pdf(-1.0, 0.0))
        for alpha in (0.0, 1.0, 10.0, 100.0):
            total = adaptive_gauss_legendre(lambda phi: angular_phase_pdf(alpha, phi), -math.pi, math.pi, breakpoints=(0.0,))
            self.assertAlmostEqual(total, 1.0, delta=1e-10)
        # deep tail and huge SNR stay finite
        values = angular_phase_pdf(1e4, np.linspace(-math.pi, math.pi, 101))
        self.assertTrue(np.all(np.isfinite(values)))
        self.assertTrue(np.all(values >= 0))

    @number("1.5")
    def test_transition_prob(self):
        q2 = PhaseQuantizer(2)
        for y in range(4):
            self.assertAlmostEqual(transition_prob(q2, 0.0, 1.234, y), 0.25, delta=1e-12)
        q3 = PhaseQuantizer(3)
        self.assertAlmostEqual(
            transition_prob(q3, 4.0, 0.3 + 2 * math.pi / 8, 2),
            transition_prob(q3, 4.0, 0.3, 1),
            delta=1e-9,
        )
        self.assertRaises(DomainError, lambda: transition_prob(q2, 1.0, 0.0, 4))
        self.assertRaises(DomainError, lambda: transition_prob(q2, -1.0, 0.0, 0))

    @number("1.6")
    def test_rows_are_stochastic(self):
        for bits in (1, 2, 3, 4):
            q = PhaseQuantizer(bits)
            for alpha in (0.0, 0.5, 1.0, 4.0, 25.0):
                for theta in 2 * math.pi * np.arange(32) / 32:
                    row = transition_row(q, ComplexPoint.from_alpha(alpha, theta))
                    self.assertTrue(np.all(row >= 0))
                    self.assertAlmostEqual(math.fsum(row), 1.0, delta=1e-9)

    @number("1.7")
    def test_row_limits(self):
        row = transition_row(PhaseQuantizer(1), ComplexPoint.from_alpha(1e4, math.pi / 2))
        self.assertAlmostEqual(row[0], 1.0, delta=1e-12)
        self.assertAlmostEqual(row[1], 0.0, delta=1e-12)
        row = transition_row(PhaseQuantizer(2), ComplexPoint(0.0))
        np.testing.assert_allclose(row, [0.25] * 4, atol=1e-12)
        # the returned row is a copy, the cache is untouched
        row[0] = 5.0
        self.assertAlmostEqual(transition_row(PhaseQuantizer(2), ComplexPoint(0.0))[0], 0.25)

    @number("1.8")
    def test_symmetry_identities(self):
        for bits in (1, 2, 3):
            q = PhaseQuantizer(bits)
            m, half = q.sectors, q.sectors // 2
            for alpha in (0.5, 4.0, 10.0):
                base = transition_row(q, ComplexPoint.from_alpha(alpha, 0.3))
                for k in range(1, m + 1):
                    shifted = transition_row(q, ComplexPoint.from_alpha(alpha, 0.3 + 2 * math.pi * k / m))
                    np.testing.assert_allclose(shifted, np.roll(base, k), rtol=0, atol=1e-9)
                bisector = transition_row(q, ComplexPoint.from_alpha(alpha, math.pi / m))
                edge = transition_row(q, ComplexPoint.from_alpha(alpha, 0.0))
                for y in range(m):
                    self.assertAlmostEqual(bisector[(half - y) % m], bisector[(half + y) % m], delta=1e-9)
                    self.assertAlmostEqual(edge[(half - y) % m], edge[(half - 1 + y) % m], delta=1e-9)

    @number("1.9")
    def test_golden_rows(self):
        golden = read_golden("transition_oracle.csv")
        exact = golden[(golden.n_samples == 0) & (golden.seed == 0)]
        self.assertGreater(len(exact), 0)
        for (bits, alpha, theta), rows in exact.groupby(["b", "alpha", "theta"]):
            row = transition_row(PhaseQuantizer(int(bits)), ComplexPoint.from_alpha(alpha, theta))
            for y, freq in zip(rows.y, rows.freq):
                self.assertAlmostEqual(row[int(y)], freq, delta=1e-9)

    @number("1.10")
    def test_oracle_determinism(self):
        q = PhaseQuantizer(3)
        point = ComplexPoint.from_alpha(2.0, 0.7)
        n = 3 * 2 ** 16 + 5
        first = mc_transition_oracle(q, point, n, seed=7)
        np.testing.assert_array_equal(first, mc_transition_oracle(q, point, n, seed=7))
        np.testing.assert_array_equal(first, mc_transition_oracle(q, point, n, seed=7, workers=4))
        self.assertFalse(np.array_equal(first, mc_transition_oracle(q, point, n, seed=8)))
        self.assertRaises(DomainError, lambda: mc_transition_oracle(q, point, 0, seed=7))

    @number("1.11")
    def test_oracle_agreement(self):
        q = PhaseQuantizer(3)
        point = ComplexPoint.from_alpha(2.0, 0.7)
        n = 10 ** 6
        freq = mc_transition_oracle(q, point, n, seed=11)
        error = oracle_standard_error(freq, n)
        row = transition_row(q, point)
        self.assertTrue(np.all(np.abs(freq - row) <= 4 * error + 1 / n))

        uniform = mc_transition_oracle(PhaseQuantizer(2), ComplexPoint(0.0), n, seed=12)
        np.testing.assert_allclose(uniform, [0.25] * 4, atol=0.002)

    @number("1.12")
    def test_phase_histogram(self):
        n, bins = 10 ** 6, 720
        rng = np.random.default_rng(2024)
        samples = 1.0 + (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        counts, edges = np.histogram(np.angle(samples), bins=bins, range=(-math.pi, math.pi))
        masses = np.array([
            adaptive_gauss_legendre(lambda phi: angular_phase_pdf(1.0, phi), a, b)
            for a, b in zip(edges[:-1], edges[1:])
        ])
        standard_error = np.sqrt(masses * (1 - masses) / n)
        # 720 bins: 4.5 standard errors keeps the family-wise false alarm rate below 1%
        self.assertTrue(np.all(np.abs(counts / n - masses) <= 4.5 * standard_error + 1 / n))

    @number("1.13")
    @slow()
    @timeout(600)
    def test_oracle_acceptance(self):
        rng = np.random.default_rng(0x5EED)
        n = 10 ** 7
        for _ in range(12):
            q = PhaseQuantizer(int(rng.integers(1, 4)))
            point = ComplexPoint.from_alpha(float(rng.uniform(0, 25)), float(rng.uniform(0, 2 * math.pi)))
            freq = mc_transition_oracle(q, point, n, seed=int(rng.integers(2 ** 32)), workers=4)
            row = transition_row(q, point)
            self.assertTrue(np.all(np.abs(freq - row) <= 4 * oracle_standard_error(freq, n) + 1 / n))
        uniform = mc_transition_oracle(PhaseQuantizer(2), ComplexPoint(0.0), n, seed=3, workers=4)
        np.testing.assert_allclose(uniform, [0.25] * 4, atol=0.001)

    @number("1.14")
    def test_sampled_conditional_entropy(self):
        q = PhaseQuantizer(2)
        point = ComplexPoint.from_alpha(1.0, math.pi / 4)
        exact = cond_entropy_point(q, point)

        golden = read_golden("transition_oracle.csv")
        rows = golden[(golden.b == 2) & (golden.alpha == 1.0) & np.isclose(golden.theta, math.pi / 4)
                      & (golden.n_samples == 0)].sort_values("y")
        self.assertEqual(len(rows), q.sectors)
        self.assertAlmostEqual(entropy_bits(rows.freq.to_numpy()), exact, delta=1e-9)

        n = 10 ** 6
        sampled = entropy_bits(mc_transition_oracle(q, point, n, seed=20240))
        row = transition_row(q, point)
        spread = math.sqrt((float(np.dot(row, np.log2(row) ** 2)) - exact ** 2) / n)
        # the plug-in estimate sits (2^b - 1) / (2 n ln 2) bits low on average
        bias = (q.sectors - 1) / (2 * n * math.log(2))
        self.assertAlmostEqual(sampled, exact - bias, delta=4 * spread + bias)
