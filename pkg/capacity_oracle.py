"""
Independent capacity oracle: a power-constrained Blahut-Arimoto solver over a
polar input grid, a rotation search for PSK constellations and the rate sweep
comparing input families.
"""
from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.optimize import brentq, minimize_scalar
from scipy.special import rel_entr

from constants import (
    BA_MAX_ITER,
    BA_TOLERANCE,
    CIRCLE_ORDER,
    COARSE_SCAN_POINTS,
    GAUSSIAN_GRID,
    LAMBDA_DOUBLINGS,
    LAMBDA_ITERATIONS,
    LAMBDA_XTOL,
    ORACLE_PHASES,
    ORACLE_RADII,
    ORACLE_RADIUS_FACTOR,
    POWER_SLACK,
    ROTATION_XTOL,
)
from errors import DomainError, NumericError
from info_metrics import (
    LN2,
    InputDistribution,
    capacity,
    gaussian_input,
    mutual_information,
    psk_input,
    transition_matrix,
)
from quantizer import ChannelParams, ComplexPoint, PhaseQuantizer
from utils import db_to_linear, lcm, reduce_phase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InputGrid:
    """
    Polar grid of candidate input points.

    A zero entry in radii is folded into includes_origin; the stored radii are
    the positive ones, sorted. Phases are reduced to [0, 2pi) and sorted.
    """

    radii: tuple[float, ...]
    phases: tuple[float, ...]
    includes_origin: bool = False

    def __post_init__(self) -> None:
        radii = [float(r) for r in self.radii]
        if any(not math.isfinite(r) or r < 0 for r in radii):
            raise DomainError("grid radii must be finite and nonnegative")
        origin = self.includes_origin or any(r == 0 for r in radii)
        positive = sorted(set(r for r in radii if r > 0))
        if not positive:
            raise DomainError("an input grid needs at least one radius > 0")
        phases = sorted(set(reduce_phase(p) for p in self.phases))
        if not phases:
            raise DomainError("an input grid needs at least one phase")
        object.__setattr__(self, "radii", tuple(positive))
        object.__setattr__(self, "phases", tuple(phases))
        object.__setattr__(self, "includes_origin", origin)

    @classmethod
    def aligned(
        cls,
        q: PhaseQuantizer,
        p_budget: float,
        n_phases: int = ORACLE_PHASES,
        n_radii: int = ORACLE_RADII,
        radius_factor: float = ORACLE_RADIUS_FACTOR,
    ) -> InputGrid:
        """
        Radii 0, ..., radius_factor * sqrt(p_budget) (n_radii values, evenly
        spaced) and n_phases phases with the origin on the sector-0 bisector.
        """
        if p_budget <= 0:
            raise DomainError(f"power budget must be positive, got {p_budget}")
        if n_phases < 1 or n_radii < 2:
            raise DomainError(f"grid too small: {n_phases} phases, {n_radii} radii")
        radii = np.linspace(0.0, radius_factor * math.sqrt(p_budget), n_radii)
        phases = q.bisector(0) + 2 * math.pi * np.arange(n_phases) / n_phases
        return cls(tuple(radii), tuple(phases), includes_origin=True)

    @property
    def radius_step(self) -> float:
        radii = ((0.0,) if self.includes_origin else ()) + self.radii
        return float(np.min(np.diff(radii))) if len(radii) > 1 else radii[0]

    @property
    def phase_step(self) -> float:
        if len(self.phases) == 1:
            return 2 * math.pi
        gaps = np.diff(self.phases + (self.phases[0] + 2 * math.pi,))
        return float(np.min(gaps))

    def points(self) -> list[ComplexPoint]:
        """Origin first (if present), then radius-major, phase-minor."""
        points = [ComplexPoint(0.0)] if self.includes_origin else []
        points.extend(ComplexPoint(r, phase) for r in self.radii for phase in self.phases)
        return points

    def __len__(self) -> int:
        return len(self.radii) * len(self.phases) + int(self.includes_origin)


@dataclass
class OracleResult:
    """
    Outcome of blahut_arimoto.

    multiplier is the power-constraint Lagrange multiplier of the last update,
    in nats per unit of power. bound_history holds the rate of every iterate in
    bits, a nondecreasing sequence of lower bounds on the grid capacity.
    """

    rate: float
    weights: np.ndarray
    multiplier: float
    iterations: int
    converged: bool
    feasible: bool = True
    bound_history: list[float] = field(default_factory=list)
    points: list[ComplexPoint] = field(default_factory=list, repr=False)

    @property
    def power(self) -> float:
        return float(np.dot(self.weights, [p.alpha for p in self.points]))

    def distribution(self, min_weight: float = 0.0) -> InputDistribution:
        """Input law on the grid points carrying more than min_weight."""
        keep = [i for i, w in enumerate(self.weights) if w > min_weight]
        probs = self.weights[keep] / self.weights[keep].sum()
        return InputDistribution.from_points([self.points[i] for i in keep], probs)


@dataclass
class _Iterate:
    weights: np.ndarray
    multiplier: float
    iterations: int
    converged: bool
    history: list[float]


def _divergences(matrix: np.ndarray, output: np.ndarray) -> np.ndarray:
    """D(W(.|u_i) || output) in nats for every column."""
    return np.sum(rel_entr(matrix, output[:, None]), axis=0)


def _tilted_power(weights: np.ndarray, exponent: np.ndarray, costs: np.ndarray, multiplier: float) -> float:
    shifted = exponent - multiplier * costs
    tilted = weights * np.exp(shifted - shifted.max())
    return float(np.dot(tilted, costs) / tilted.sum())


def _budget_multiplier(
    weights: np.ndarray,
    exponent: np.ndarray,
    costs: np.ndarray,
    p_budget: float,
    start: float,
) -> float:
    """
    Smallest multiplier >= 0 whose update weights * exp(exponent - multiplier * costs)
    has average power <= p_budget.

    The tilted power decreases in the multiplier. The root is bracketed by
    doubling from the previous multiplier and then solved with brentq.
    """
    # relative slack absorbs rounding when every supported cost equals the budget
    target = p_budget * (1 + 1e-12)

    def excess(multiplier: float) -> float:
        return _tilted_power(weights, exponent, costs, multiplier) - target

    if excess(0.0) <= 0:
        return 0.0
    low, high = 0.0, max(start, 1e-3)
    if excess(high) > 0:
        for _ in range(LAMBDA_DOUBLINGS):
            low, high = high, 2 * high
            if excess(high) <= 0:
                break
        else:
            logger.debug("multiplier %.6g still exceeds the power budget", high)
            return high
    elif excess(0.5 * high) > 0:
        low = 0.5 * high
    return brentq(excess, low, high, xtol=LAMBDA_XTOL, maxiter=LAMBDA_ITERATIONS)


def _iterate(
    matrix: np.ndarray,
    costs: np.ndarray,
    p_budget: float | None,
    start: np.ndarray,
    tol: float,
    max_iter: int,
) -> _Iterate:
    """
    Blahut-Arimoto iterations with the power budget met by every update.

    Each update is weights * exp(D_i - multiplier * c_i), normalised, with the
    multiplier re-solved so the new weights meet p_budget (p_budget None means
    unconstrained). For any multiplier >= 0 the capacity is at most
    max_i(D_i - multiplier * c_i) + multiplier * P, and the updated weights
    reach at least log sum_i w_i exp(D_i - multiplier * c_i) + multiplier * P;
    the loop stops when that gap is below tol bits.
    """
    weights = start.copy()
    multiplier = 0.0
    history: list[float] = []
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        output = matrix @ weights
        divergences = _divergences(matrix, output)
        if not np.all(np.isfinite(divergences)):
            raise NumericError(f"non-finite divergence at iteration {iteration}")
        history.append(float(np.dot(weights, divergences)) / LN2)
        if p_budget is not None:
            multiplier = _budget_multiplier(weights, divergences, costs, p_budget, multiplier)
        exponent = divergences - multiplier * costs
        factors = np.exp(exponent - exponent.max())
        normaliser = float(np.dot(weights, factors))
        gap = -math.log(normaliser) / LN2
        weights = weights * factors / normaliser
        if gap < tol:
            converged = True
            break
    return _Iterate(weights, multiplier, iteration, converged, history)


def blahut_arimoto(
    q: PhaseQuantizer,
    grid: InputGrid,
    p_budget: float,
    tol: float = BA_TOLERANCE,
    max_iter: int = BA_MAX_ITER,
) -> OracleResult:
    """
    Maximize I over input laws on the grid with average power <= p_budget.

    The power constraint enters as a penalty exp(-multiplier * r^2) in the
    weight update, with the multiplier solved at every iteration so that the
    update meets the budget (multiplier 0 when the unpenalized update already
    does). The start is the uniform law tilted onto the budget, so every
    iterate is feasible and the rate never decreases.

    A grid with no point inside the budget is solved on its cheapest points;
    the result is flagged infeasible and its multiplier is infinite.

    :raises NumericError: non-finite intermediate values.
    :raises DomainError: p_budget <= 0, tol <= 0 or max_iter < 1.
    """
    if not p_budget > 0:
        raise DomainError(f"power budget must be positive, got {p_budget}")
    if not tol > 0 or max_iter < 1:
        raise DomainError(f"bad stopping rule: tol={tol}, max_iter={max_iter}")

    points = grid.points()
    matrix = transition_matrix(q, points)
    costs = np.array([point.alpha for point in points])
    feasible = bool(costs.min() <= p_budget * (1 + POWER_SLACK))

    if feasible:
        uniform = np.full(len(points), 1.0 / len(points))
        start_multiplier = _budget_multiplier(uniform, np.zeros(len(points)), costs, p_budget, 1.0)
        start = uniform * np.exp(-start_multiplier * (costs - costs.min()))
        run = _iterate(matrix, costs, p_budget, start / start.sum(), tol, max_iter)
        multiplier = run.multiplier
    else:
        logger.warning("no grid point meets the power budget %.6g, the result violates it", p_budget)
        cheapest = (costs == costs.min()).astype(float)
        run = _iterate(matrix, costs, None, cheapest / cheapest.sum(), tol, max_iter)
        multiplier = math.inf
    if not run.converged:
        logger.warning("Blahut-Arimoto stopped at max_iter=%d before reaching tol=%.3g", max_iter, tol)
    output = matrix @ run.weights
    rate = float(np.dot(run.weights, _divergences(matrix, output))) / LN2
    logger.debug(
        "Blahut-Arimoto: rate %.9f bits, multiplier %.6g, %d iterations", rate, multiplier, run.iterations,
    )
    return OracleResult(
        rate=rate,
        weights=run.weights,
        multiplier=multiplier,
        iterations=run.iterations,
        converged=run.converged,
        feasible=feasible,
        bound_history=run.history,
        points=points,
    )


def best_rotation(q: PhaseQuantizer, m: int, p_budget: float) -> tuple[float, float]:
    """
    Rotation of equiprobable m-PSK at amplitude sqrt(p_budget) maximizing I.

    The rate is periodic in the rotation with period 2pi / lcm(m, 2^b). A
    coarse scan over that period picks a bracket, golden-section search
    refines it; the smallest maximizing rotation of the coarse scan wins ties.

    :return: (theta_star, rate) with theta_star in [0, period).
    """
    if m < 2:
        raise DomainError(f"rotation search needs m >= 2, got {m}")
    if p_budget < 0:
        raise DomainError(f"power budget must be nonnegative, got {p_budget}")
    period = 2 * math.pi / lcm(m, q.sectors)
    amplitude = math.sqrt(p_budget)

    def objective(theta: float) -> float:
        return -mutual_information(q, psk_input(m, amplitude, theta)).mutual_information

    step = period / COARSE_SCAN_POINTS
    scan = step * np.arange(COARSE_SCAN_POINTS)
    values = np.array([objective(theta) for theta in scan])
    k = int(np.argmin(values))
    best_theta, best_value = float(scan[k]), float(values[k])
    try:
        refined = minimize_scalar(
            objective,
            bracket=(best_theta - step, best_theta, best_theta + step),
            method="golden",
            options={"xtol": ROTATION_XTOL},
        )
        if refined.fun < best_value:
            best_theta, best_value = float(refined.x), float(refined.fun)
    except (ValueError, RuntimeError):
        # flat objective, the coarse point stands
        pass
    theta_star = float(np.mod(best_theta, period))
    if theta_star >= period:
        theta_star = 0.0
    return theta_star, max(0.0, -best_value)


class InputFamily(ABC):
    """A named family of inputs evaluated at a given SNR in a rate sweep."""

    @property
    @abstractmethod
    def name(self) -> str:
        raise NotImplementedError()

    @abstractmethod
    def evaluate(self, q: PhaseQuantizer, snr: float) -> tuple[float, float]:
        """(rate in bits, rotation used or NaN)."""
        raise NotImplementedError()


@dataclass(frozen=True)
class RotatedPsk(InputFamily):

    order: int

    @property
    def name(self) -> str:
        return f"{self.order}-PSK"

    def evaluate(self, q: PhaseQuantizer, snr: float) -> tuple[float, float]:
        theta, rate = best_rotation(q, self.order, snr)
        return rate, theta


@dataclass(frozen=True)
class DiscretizedGaussian(InputFamily):

    n_radii: int = GAUSSIAN_GRID[0]
    n_phases: int = GAUSSIAN_GRID[1]

    @property
    def name(self) -> str:
        return "gaussian"

    def evaluate(self, q: PhaseQuantizer, snr: float) -> tuple[float, float]:
        return mutual_information(q, gaussian_input(snr, self.n_radii, self.n_phases)).mutual_information, math.nan


@dataclass(frozen=True)
class ClosedFormCapacity(InputFamily):

    @property
    def name(self) -> str:
        return "capacity"

    def evaluate(self, q: PhaseQuantizer, snr: float) -> tuple[float, float]:
        return capacity(ChannelParams(snr, q.bits)), q.bisector(0)


def default_families(q: PhaseQuantizer) -> list[InputFamily]:
    """2^(b-1), 2^b, 2^(b+1) and 256-PSK, the discretized Gaussian and the capacity."""
    orders = sorted({max(2, q.sectors // 2), q.sectors, 2 * q.sectors, CIRCLE_ORDER})
    return [RotatedPsk(m) for m in orders] + [DiscretizedGaussian(), ClosedFormCapacity()]


def rate_sweep(
    q: PhaseQuantizer,
    families: Sequence[InputFamily],
    snr_grid_db: Sequence[float],
    workers: int = 1,
) -> pd.DataFrame:
    """
    Rate of every family at every SNR.

    Rows are ordered by SNR, then by family in the given order, whatever the
    number of workers.

    :return: DataFrame with columns snr_db, family, rate_bits, theta_star.
    """
    snr_grid_db = [float(s) for s in snr_grid_db]
    if not all(math.isfinite(s) for s in snr_grid_db):
        raise DomainError("the SNR grid must be finite")
    snrs = db_to_linear(snr_grid_db)

    def evaluate(index: int) -> list[dict]:
        rows = []
        for family in families:
            rate, theta = family.evaluate(q, float(snrs[index]))
            rows.append({
                "snr_db": snr_grid_db[index],
                "family": family.name,
                "rate_bits": rate,
                "theta_star": theta,
            })
        logger.debug("rate sweep at %.3g dB done", snr_grid_db[index])
        return rows

    indices = range(len(snr_grid_db))
    if workers <= 1:
        chunks = [evaluate(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(evaluate, indices))
    rows = [row for chunk in chunks for row in chunk]
    return pd.DataFrame(rows, columns=["snr_db", "family", "rate_bits", "theta_star"])


def mass_near_optimum(result: OracleResult, q: PhaseQuantizer, grid: InputGrid, p_budget: float) -> float:
    """
    Weight the oracle puts within one grid step of radius sqrt(p_budget) and
    within one phase step of a sector bisector.
    """
    target = math.sqrt(p_budget)
    radius_slack = grid.radius_step * (1 + 1e-9)
    phase_slack = grid.phase_step * (1 + 1e-9)
    total = 0.0
    for point, weight in zip(result.points, result.weights):
        offset = math.remainder(point.phase - q.bisector(0), q.width)
        if abs(point.amplitude - target) <= radius_slack and abs(offset) <= phase_slack:
            total += weight
    return total
