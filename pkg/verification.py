"""
Numerical certificate for one (b, P') pair: symmetry identities of the
transition probabilities, monotonicity and convexity of H(Y|U) in the SNR,
optimality of full-power bisector PSK, the KKT condition on a dense phase
grid and agreement with the Blahut-Arimoto oracle.

Every check reports a margin: positive when it passes, the distance to its
threshold either way.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from capacity_oracle import InputGrid, best_rotation, blahut_arimoto, mass_near_optimum
from constants import DEFAULT_SEED, KKT_TOLERANCE, ROW_SUM_TOLERANCE, CheckStatus
from errors import InsufficientDataError
from fading_outage import threshold_probe
from info_metrics import (
    InputDistribution,
    capacity,
    cond_entropy_point,
    kkt_gap,
    mutual_information,
    psk_input,
    symmetrize,
)
from policy import FixedPsk
from quantizer import ChannelParams, ComplexPoint, PhaseQuantizer, transition_row

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-9
STRICT_DECREASE = 1e-6
CONVEXITY_TOLERANCE = 1e-6
ROTATION_TOLERANCE = 1e-6
ORACLE_TOLERANCE = 1e-3
ORACLE_MASS = 0.99
SEPARATION_THRESHOLD = 3.0

ALPHA_GRID = np.arange(0, 101) * 0.25
CONVEXITY_STEP = 1e-2
# H(Y|U) closer than this to its high-SNR limit counts as saturated
SATURATION_GAP = 1e-5


@dataclass(frozen=True)
class CheckResult:

    name: str
    status: CheckStatus
    margin: float
    detail: str = ""


@dataclass
class VerificationReport:

    bits: int
    snr: float
    inject_wrong_bisector: bool = False
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def failures(self) -> list[CheckResult]:
        return [check for check in self.checks if check.status is CheckStatus.FAIL]

    def add(self, check: CheckResult) -> None:
        logger.info("%-28s %-4s margin %.3e %s", check.name, check.status.name, check.margin, check.detail)
        self.checks.append(check)


def _judge(name: str, margin: float, detail: str = "") -> CheckResult:
    status = CheckStatus.PASS if margin >= 0 else CheckStatus.FAIL
    return CheckResult(name, status, float(margin), detail)


def check_row_stochastic(q: PhaseQuantizer) -> CheckResult:
    error = 0.0
    for alpha in (0.0, 0.5, 1.0, 4.0, 25.0):
        for theta in 2 * math.pi * np.arange(32) / 32:
            row = transition_row(q, ComplexPoint.from_alpha(alpha, theta))
            error = max(error, abs(math.fsum(row) - 1.0))
    return _judge("row_stochastic", ROW_SUM_TOLERANCE - error, f"max |sum - 1| = {error:.3e}")


def check_shift_identity(q: PhaseQuantizer, snr: float) -> CheckResult:
    error = 0.0
    theta = 0.3
    for alpha in (snr, 1.0):
        base = transition_row(q, ComplexPoint.from_alpha(alpha, theta))
        for k in range(1, q.sectors + 1):
            shifted = transition_row(q, ComplexPoint.from_alpha(alpha, theta + k * q.width))
            error = max(error, float(np.max(np.abs(shifted - np.roll(base, k)))))
    return _judge("shift_identity", IDENTITY_TOLERANCE - error, f"max deviation {error:.3e}")


def check_bisector_reflection(q: PhaseQuantizer, snr: float) -> CheckResult:
    row = transition_row(q, ComplexPoint.from_alpha(snr, q.bisector(0)))
    half = q.sectors // 2
    error = max(abs(row[(half - y) % q.sectors] - row[(half + y) % q.sectors]) for y in range(q.sectors))
    return _judge("bisector_reflection", IDENTITY_TOLERANCE - error, f"max deviation {error:.3e}")


def check_zero_reflection(q: PhaseQuantizer, snr: float) -> CheckResult:
    row = transition_row(q, ComplexPoint.from_alpha(snr, 0.0))
    half = q.sectors // 2
    error = max(abs(row[(half - y) % q.sectors] - row[(half - 1 + y) % q.sectors]) for y in range(q.sectors))
    return _judge("zero_reflection", IDENTITY_TOLERANCE - error, f"max deviation {error:.3e}")


def probe_phases(q: PhaseQuantizer) -> list[float]:
    """Sector edge, quarter-sector and bisector phases."""
    return [0.0, q.width / 4, q.bisector(0)]


def entropy_curve(q: PhaseQuantizer, theta: float, alphas: np.ndarray) -> np.ndarray:
    return np.array([cond_entropy_point(q, ComplexPoint.from_alpha(float(a), theta)) for a in alphas])


def entropy_limit(q: PhaseQuantizer, theta: float) -> float:
    """High-SNR limit of H(Y|U) at phase theta: 1 bit on a sector edge, else 0."""
    return 1.0 if abs(math.remainder(theta, q.width)) < 1e-12 else 0.0


def unsaturated_steps(q: PhaseQuantizer, theta: float, curve: np.ndarray) -> np.ndarray:
    """Mask of the steps of an entropy curve that end more than SATURATION_GAP above its limit."""
    return curve[1:] - entropy_limit(q, theta) > SATURATION_GAP


def check_decreasing_in_snr(q: PhaseQuantizer) -> CheckResult:
    """
    H(Y|U) never increases along the SNR grid, and drops by more than 1e-6
    per step until it saturates. A one-bit quantizer fed on a sector edge
    splits evenly at every SNR, so that curve has no strict steps at all.
    """
    increase = -math.inf
    smallest_drop = math.inf
    for theta in probe_phases(q):
        curve = entropy_curve(q, theta, ALPHA_GRID)
        steps = np.diff(curve)
        increase = max(increase, float(steps.max()))
        strict = unsaturated_steps(q, theta, curve)
        if strict.any():
            smallest_drop = min(smallest_drop, float(-steps[strict].max()))
    margin = min(IDENTITY_TOLERANCE - increase, smallest_drop - STRICT_DECREASE)
    return _judge("decreasing_in_snr", margin, f"max step {increase:.3e}, smallest strict drop {smallest_drop:.3e}")


def check_convex_in_snr(q: PhaseQuantizer) -> CheckResult:
    h = CONVEXITY_STEP
    worst = math.inf
    for theta in probe_phases(q):
        centres = ALPHA_GRID[ALPHA_GRID >= h]
        below = entropy_curve(q, theta, centres - h)
        middle = entropy_curve(q, theta, centres)
        above = entropy_curve(q, theta, centres + h)
        worst = min(worst, float(np.min((above - 2 * middle + below) / h ** 2)))
    return _judge("convex_in_snr", worst + CONVEXITY_TOLERANCE, f"min second difference {worst:.3e}")


def check_symmetrization(q: PhaseQuantizer, snr: float) -> CheckResult:
    amplitude = math.sqrt(snr)
    F = InputDistribution.from_points(
        [ComplexPoint(amplitude, 0.1), ComplexPoint(amplitude / 2, 2.0)], [0.7, 0.3],
    )
    before = mutual_information(q, F)
    after = mutual_information(q, symmetrize(q, F))
    gain = after.mutual_information - before.mutual_information
    entropy_error = abs(after.output_entropy - q.bits)
    margin = min(gain + IDENTITY_TOLERANCE, IDENTITY_TOLERANCE - entropy_error)
    return _judge("symmetrization", margin, f"rate gain {gain:.3e}, |H(Y) - b| = {entropy_error:.3e}")


def check_full_power(q: PhaseQuantizer, snr: float) -> CheckResult:
    rates = [
        mutual_information(q, psk_input(q.sectors, math.sqrt(snr * k / 64), q.bisector(0))).mutual_information
        for k in range(1, 65)
    ]
    margin = rates[-1] - max(rates[:-1])
    return _judge("full_power", margin, f"rate at full power {rates[-1]:.9f}")


def check_bisector_rotation(q: PhaseQuantizer, snr: float) -> CheckResult:
    theta, _ = best_rotation(q, q.sectors, snr)
    distance = abs(math.remainder(theta - q.bisector(0), q.width))
    return _judge("bisector_rotation", ROTATION_TOLERANCE - distance, f"theta* = {theta:.12f}")


def check_capacity_is_psk(q: PhaseQuantizer, snr: float) -> CheckResult:
    closed_form = capacity(ChannelParams(snr, q.bits))
    psk = mutual_information(q, psk_input(q.sectors, math.sqrt(snr), q.bisector(0))).mutual_information
    error = abs(closed_form - psk)
    return _judge("capacity_is_psk", IDENTITY_TOLERANCE - error, f"C = {closed_form:.12f}")


def check_kkt_grid(q: PhaseQuantizer, snr: float) -> CheckResult:
    params = ChannelParams(snr, q.bits)
    gaps = [kkt_gap(params, theta) for theta in 2 * math.pi * np.arange(1024) / 1024]
    worst = min(gaps)
    return _judge("kkt_grid", worst + KKT_TOLERANCE, f"min gap {worst:.3e}")


def check_kkt_support(q: PhaseQuantizer, snr: float, inject_wrong_bisector: bool = False) -> CheckResult:
    """
    KKT equality on the support of the tested input: bisector PSK, or the
    PSK rotated onto the sector edges when inject_wrong_bisector is set.
    """
    params = ChannelParams(snr, q.bits)
    rotation = 0.0 if inject_wrong_bisector else q.bisector(0)
    support = psk_input(q.sectors, math.sqrt(snr), rotation).points
    worst = max(abs(kkt_gap(params, point.phase)) for point in support)
    return _judge("kkt_support", KKT_TOLERANCE - worst, f"rotation {rotation:.6f}, max |gap| {worst:.3e}")


def check_oracle(q: PhaseQuantizer, snr: float) -> CheckResult:
    grid = InputGrid.aligned(q, snr)
    result = blahut_arimoto(q, grid, snr)
    error = abs(result.rate - capacity(ChannelParams(snr, q.bits)))
    mass = mass_near_optimum(result, q, grid, snr)
    margin = min(ORACLE_TOLERANCE - error, mass - ORACLE_MASS)
    return _judge("oracle_agreement", margin, f"|rate - C| = {error:.3e}, mass near optimum {mass:.4f}")


def check_threshold_effect(n_samples: int, seed: int, workers: int = 1) -> CheckResult:
    """
    Outage exponents of fixed bisector QPSK on a 2-bit quantizer at R = 0.5
    and R = 1.9. Reported for information, never failed.
    """
    policy = FixedPsk(4, math.pi / 4, table_size=(128, 128))
    try:
        probe = threshold_probe(2, (0.5, 1.9), [10, 15, 20, 25, 30], (10, 30), n_samples, seed, policy, workers)
    except InsufficientDataError as error:
        return CheckResult("threshold_effect", CheckStatus.INFO, math.nan, str(error))
    slopes = ", ".join(
        f"R = {rate}: {report.slope:.3f} +- {report.stderr:.3f}" for rate, report in sorted(probe.reports.items())
    )
    margin = probe.separation - SEPARATION_THRESHOLD
    return CheckResult("threshold_effect", CheckStatus.INFO, margin, f"{slopes}; separation {probe.separation:.2f} SE")


def run_verification(
    bits: int,
    snr: float,
    inject_wrong_bisector: bool = False,
    probe_samples: int = 200_000,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> VerificationReport:
    """Run every check for (bits, snr); probe_samples = 0 skips the outage probe."""
    q = PhaseQuantizer(bits)
    report = VerificationReport(bits, snr, inject_wrong_bisector)
    report.add(check_row_stochastic(q))
    report.add(check_shift_identity(q, snr))
    report.add(check_bisector_reflection(q, snr))
    report.add(check_zero_reflection(q, snr))
    report.add(check_decreasing_in_snr(q))
    report.add(check_convex_in_snr(q))
    report.add(check_symmetrization(q, snr))
    report.add(check_full_power(q, snr))
    report.add(check_bisector_rotation(q, snr))
    report.add(check_capacity_is_psk(q, snr))
    report.add(check_kkt_grid(q, snr))
    report.add(check_kkt_support(q, snr, inject_wrong_bisector))
    report.add(check_oracle(q, snr))
    if probe_samples > 0:
        report.add(check_threshold_effect(probe_samples, seed, workers))
    return report
