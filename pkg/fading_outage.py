"""
Outage probability of the phase-quantized channel under Rayleigh fading with
channel knowledge at the receiver only.

SNRs are linear here; dB values appear only in the rows of an OutageCurve.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.optimize import bisect
from scipy.stats import binomtest, linregress

from constants import (
    CONFIDENCE_LEVEL,
    DEFAULT_SEED,
    RARE_EVENT_COUNT,
    THRESHOLD_RTOL,
    THRESHOLD_XTOL,
)
from errors import ConvergenceError, DomainError, InsufficientDataError, UnattainableRateError
from info_metrics import capacity
from monte_carlo import STREAM_FADING, map_chunks
from policy import FixedPsk, GenieRotatedCapacity, RatePolicy
from quantizer import ChannelParams, PhaseQuantizer
from utils import db_to_linear

logger = logging.getLogger(__name__)

OUTAGE_COLUMNS = ["snr_db", "rate_target", "policy", "p_out", "ci_low", "ci_high", "n_samples", "seed"]

# capacity() reaches b only in the limit; past this the threshold search gives up
MAX_THRESHOLD_GAIN = 1e12


@dataclass(frozen=True)
class ChannelDraw:
    """One Rayleigh realization h, |h|^2 unit-mean exponential, phase uniform."""

    gain: complex

    @property
    def power(self) -> float:
        return abs(self.gain) ** 2

    @property
    def phase(self) -> float:
        return math.atan2(self.gain.imag, self.gain.real)


@dataclass(frozen=True)
class FadingScenario:

    bits: int
    avg_snr: float
    rate_target: float
    policy: RatePolicy = field(default_factory=GenieRotatedCapacity)
    n_samples: int = 10 ** 6
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if not math.isfinite(self.avg_snr) or self.avg_snr < 0:
            raise DomainError(f"average SNR must be finite and nonnegative, got {self.avg_snr}")
        if not math.isfinite(self.rate_target) or self.rate_target < 0:
            raise DomainError(f"rate target must be finite and nonnegative, got {self.rate_target}")
        if self.n_samples < 1:
            raise DomainError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must fit in 64 bits, got {self.seed}")

    @property
    def quantizer(self) -> PhaseQuantizer:
        return PhaseQuantizer(self.bits)

    def at_snr(self, avg_snr: float) -> FadingScenario:
        return replace(self, avg_snr=avg_snr)


@dataclass(frozen=True)
class OutageRow:

    snr_db: float
    rate_target: float
    policy: str
    p_out: float
    ci_low: float
    ci_high: float
    n_samples: int
    seed: int
    outages: int

    def __post_init__(self) -> None:
        if not 0 <= self.ci_low <= self.p_out <= self.ci_high <= 1:
            raise DomainError(f"inconsistent outage row: {self}")


@dataclass
class OutageCurve:
    """Outage rows sorted by SNR, with the fitted log-log slope once known."""

    rows: list[OutageRow]
    fitted_slope: float | None = None
    window_db: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        self.rows = sorted(self.rows, key=lambda row: row.snr_db)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([row.snr_db for row in self.rows])

    @property
    def p_out(self) -> np.ndarray:
        return np.array([row.p_out for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[getattr(row, column) for column in OUTAGE_COLUMNS] for row in self.rows],
            columns=OUTAGE_COLUMNS,
        )


@dataclass(frozen=True)
class ExponentReport:

    window_db: tuple[float, float]
    slope: float
    stderr: float
    points_used: int


@dataclass
class PolicyComparison:
    """
    Outage table of several policies on one SNR grid. crossovers maps each
    policy name to the first SNR (dB) where it beats the fixed 2^b-PSK
    baseline with disjoint confidence intervals, or None.
    """

    table: pd.DataFrame
    baseline: str | None
    crossovers: dict[str, float | None]


@dataclass(frozen=True)
class ThresholdProbe:
    """Outage exponents of one policy at two rate targets over a common window."""

    policy: str
    reports: dict[float, ExponentReport]

    @property
    def separation(self) -> float:
        """|slope difference| in combined standard errors."""
        low, high = (self.reports[rate] for rate in sorted(self.reports))
        spread = math.hypot(low.stderr, high.stderr)
        difference = abs(low.slope - high.slope)
        if spread == 0:
            return math.inf if difference > 0 else 0.0
        return difference / spread


def draw_channels(rng: np.random.Generator, size: int) -> np.ndarray:
    """size i.i.d. unit-mean Rayleigh gains."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2)


def sample_channels(n_samples: int, seed: int = DEFAULT_SEED, workers: int = 1) -> np.ndarray:
    """The exact gains outage_mc uses for (n_samples, seed), in draw order."""
    return np.concatenate(map_chunks(draw_channels, n_samples, seed, STREAM_FADING, workers=workers))


def instantaneous_rate(q: PhaseQuantizer, h: complex | ChannelDraw, rho: float, policy: RatePolicy) -> float:
    if isinstance(h, ChannelDraw):
        h = h.gain
    return policy.rate(q, complex(h), rho)


@lru_cache(maxsize=256)
def rate_threshold_gain(q: PhaseQuantizer, rate_target: float) -> float:
    """
    Received SNR gamma with capacity(gamma, b) = rate_target.

    Capacity is strictly increasing in the SNR, so gamma is unique. It is
    bracketed by repeated quadrupling and then bisected.

    :raises UnattainableRateError: rate_target >= b.
    :raises ConvergenceError: no bracket below MAX_THRESHOLD_GAIN.
    """
    if rate_target < 0:
        raise DomainError(f"rate target must be nonnegative, got {rate_target}")
    if rate_target >= q.bits:
        raise UnattainableRateError(rate_target, q.bits)
    if rate_target == 0:
        return 0.0

    def excess(gamma: float) -> float:
        return capacity(ChannelParams(gamma, q.bits)) - rate_target

    low, high = 0.0, 1.0
    while excess(high) < 0:
        low, high = high, 4 * high
        if high > MAX_THRESHOLD_GAIN:
            raise ConvergenceError(f"no SNR below {MAX_THRESHOLD_GAIN:.0e} reaches {rate_target} bits")
    return bisect(excess, low, high, xtol=THRESHOLD_XTOL, rtol=THRESHOLD_RTOL, maxiter=500)


def _snr_db(rho: float) -> float:
    return -math.inf if rho == 0 else 10 * math.log10(rho)


def outage_mc(scenario: FadingScenario, workers: int = 1) -> OutageRow:
    """
    Monte Carlo outage probability with a Wilson confidence interval.

    Draws depend on (seed, n_samples) only, so every SNR of a curve sees the
    same channel realizations.
    """
    q = scenario.quantizer
    policy = scenario.policy

    def count(rng: np.random.Generator, size: int) -> int:
        gains = draw_channels(rng, size)
        return int(np.count_nonzero(policy.outage_mask(q, gains, scenario.avg_snr, scenario.rate_target)))

    policy.prepare(q, workers)
    outages = sum(map_chunks(count, scenario.n_samples, scenario.seed, STREAM_FADING, workers=workers))
    p_out = outages / scenario.n_samples
    interval = binomtest(outages, scenario.n_samples).proportion_ci(confidence_level=CONFIDENCE_LEVEL, method="wilson")
    if outages < RARE_EVENT_COUNT and scenario.rate_target > 0:
        logger.warning(
            "only %d outage events in %d draws at %.3g dB, R = %g: estimate is unreliable",
            outages, scenario.n_samples, _snr_db(scenario.avg_snr), scenario.rate_target,
        )
    return OutageRow(
        snr_db=_snr_db(scenario.avg_snr),
        rate_target=scenario.rate_target,
        policy=policy.name,
        p_out=p_out,
        ci_low=min(float(interval.low), p_out),
        ci_high=max(float(interval.high), p_out),
        n_samples=scenario.n_samples,
        seed=scenario.seed,
        outages=outages,
    )


def outage_semianalytic(scenario: FadingScenario) -> float:
    """P(rho |h|^2 < gamma_th(R)) = 1 - exp(-gamma_th(R) / rho) for the genie policy."""
    if not isinstance(scenario.policy, GenieRotatedCapacity):
        raise DomainError("the closed-form outage only holds for the genie policy")
    gamma = rate_threshold_gain(scenario.quantizer, scenario.rate_target)
    if scenario.avg_snr == 0:
        return 1.0 if gamma > 0 else 0.0
    return float(-math.expm1(-gamma / scenario.avg_snr))


def outage_curve(
    bits: int,
    snr_grid_db: Sequence[float],
    rate_target: float,
    policy: RatePolicy,
    n_samples: int = 10 ** 6,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    window_db: tuple[float, float] | None = None,
) -> OutageCurve:
    """
    Outage rows over an SNR grid (dB). With window_db the log-log slope is
    fitted as well; a failed fit leaves fitted_slope unset.
    """
    base = FadingScenario(bits, 0.0, rate_target, policy, n_samples, seed)
    rows = [outage_mc(base.at_snr(float(rho)), workers) for rho in db_to_linear(list(snr_grid_db))]
    curve = OutageCurve(rows)
    if window_db is not None:
        try:
            report = outage_exponent_fit(curve, window_db)
        except InsufficientDataError as error:
            logger.warning("no slope for %s: %s", policy.name, error)
        else:
            curve.fitted_slope = report.slope
            curve.window_db = report.window_db
    return curve


def outage_exponent_fit(curve: OutageCurve, window_db: tuple[float, float]) -> ExponentReport:
    """
    Least-squares slope of log10 P_out against log10 rho inside the window.

    :raises InsufficientDataError: fewer than 3 rows in the window, or a row
        in the window without any outage event.
    """
    low, high = sorted(window_db)
    inside = [row for row in curve.rows if low <= row.snr_db <= high]
    empty = [row.snr_db for row in inside if row.outages == 0]
    if empty:
        raise InsufficientDataError(
            f"no outage events at {empty} dB; increase n_samples to fit the exponent"
        )
    if len(inside) < 3:
        raise InsufficientDataError(
            f"{len(inside)} points in [{low}, {high}] dB, at least 3 are needed; widen the window or the SNR grid"
        )
    x = np.array([row.snr_db for row in inside]) / 10.0
    y = np.log10([row.p_out for row in inside])
    fit = linregress(x, y)
    return ExponentReport((low, high), float(fit.slope), float(fit.stderr), len(inside))


def default_policies(q: PhaseQuantizer) -> list[RatePolicy]:
    """Genie, fixed 2^b-PSK and fixed 2^(b+1)-PSK, both on their bisector rotations."""
    return [
        GenieRotatedCapacity(),
        FixedPsk(q.sectors, math.pi / q.sectors),
        FixedPsk(2 * q.sectors, math.pi / (2 * q.sectors)),
    ]


def policy_compare(
    bits: int,
    rho_grid_db: Sequence[float],
    rate_target: float,
    policies: Sequence[RatePolicy] | None = None,
    n_samples: int = 10 ** 6,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> PolicyComparison:
    q = PhaseQuantizer(bits)
    policies = list(policies) if policies is not None else default_policies(q)
    curves = {
        policy.name: outage_curve(bits, rho_grid_db, rate_target, policy, n_samples, seed, workers)
        for policy in policies
    }
    table = pd.concat([curve.to_frame() for curve in curves.values()], ignore_index=True)

    baseline = next(
        (p.name for p in policies if isinstance(p, FixedPsk) and p.order == q.sectors),
        None,
    )
    crossovers: dict[str, float | None] = {}
    if baseline is not None:
        reference = curves[baseline].rows
        for policy in policies:
            if policy.name == baseline or isinstance(policy, GenieRotatedCapacity):
                continue
            crossovers[policy.name] = next(
                (ours.snr_db for ours, theirs in zip(curves[policy.name].rows, reference)
                 if ours.ci_high < theirs.ci_low),
                None,
            )
            if crossovers[policy.name] is not None:
                logger.info("%s beats %s from %.3g dB", policy.name, baseline, crossovers[policy.name])
    return PolicyComparison(table, baseline, crossovers)


def threshold_probe(
    bits: int,
    rate_targets: tuple[float, float],
    snr_grid_db: Sequence[float],
    window_db: tuple[float, float],
    n_samples: int = 10 ** 6,
    seed: int = DEFAULT_SEED,
    policy: RatePolicy | None = None,
    workers: int = 1,
) -> ThresholdProbe:
    """
    Fit the outage exponent of a fixed-constellation policy (default: 2^b-PSK
    on the bisectors) at a low and a high rate target.
    """
    q = PhaseQuantizer(bits)
    policy = policy if policy is not None else FixedPsk(q.sectors, math.pi / q.sectors)
    reports = {}
    for rate in rate_targets:
        curve = outage_curve(bits, snr_grid_db, rate, policy, n_samples, seed, workers)
        reports[rate] = outage_exponent_fit(curve, window_db)
        logger.info("%s, R = %g: slope %.3f +- %.3f", policy.name, rate, reports[rate].slope, reports[rate].stderr)
    return ThresholdProbe(policy.name, reports)
