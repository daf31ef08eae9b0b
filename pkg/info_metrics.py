"""
Information measures for finite discrete inputs on the phase-quantized channel.

All entropies and rates are in bits.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.special import entr

from constants import ENTROPY_FLOOR, MERGE_TOLERANCE, PROBABILITY_SUM_TOLERANCE
from errors import DomainError
from quantizer import ChannelParams, ComplexPoint, PhaseQuantizer, transition_row

logger = logging.getLogger(__name__)

LN2 = math.log(2)


@dataclass(frozen=True)
class MassPoint:

    point: ComplexPoint
    prob: float

    def __post_init__(self) -> None:
        if not -PROBABILITY_SUM_TOLERANCE <= self.prob <= 1 + PROBABILITY_SUM_TOLERANCE:
            raise DomainError(f"probability {self.prob} outside [0, 1]")
        object.__setattr__(self, "prob", min(max(float(self.prob), 0.0), 1.0))


@dataclass(frozen=True)
class InputDistribution:
    """
    Finite discrete input law F_U.

    Atoms that coincide (amplitudes equal within a relative 1e-12 and phases
    within 1e-12 rad, or both at the origin) are merged on construction, the
    first occurrence keeps its place.
    """

    atoms: tuple[MassPoint, ...]

    def __post_init__(self) -> None:
        atoms = tuple(self.atoms)
        if not atoms:
            raise DomainError("an input distribution needs at least one atom")
        total = math.fsum(atom.prob for atom in atoms)
        if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", merge_atoms(atoms))

    @classmethod
    def from_points(cls, points: Iterable[ComplexPoint], probs: Iterable[float]) -> InputDistribution:
        return cls(tuple(MassPoint(point, prob) for point, prob in zip(points, probs, strict=True)))

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self) -> Iterator[MassPoint]:
        return iter(self.atoms)

    @property
    def points(self) -> list[ComplexPoint]:
        return [atom.point for atom in self.atoms]

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([atom.prob for atom in self.atoms])

    @property
    def power(self) -> float:
        return math.fsum(atom.prob * atom.point.alpha for atom in self.atoms)

    def rotated(self, angle: float) -> InputDistribution:
        return InputDistribution(tuple(MassPoint(atom.point.rotated(angle), atom.prob) for atom in self.atoms))


@dataclass(frozen=True)
class RateReport:

    mutual_information: float
    output_entropy: float
    conditional_entropy: float


def merge_atoms(atoms: Sequence[MassPoint], tol: float = MERGE_TOLERANCE) -> tuple[MassPoint, ...]:
    """
    Merge coincident atoms, summing their probabilities.

    :complexity: O(n * k) for n atoms and k distinct atoms.
    """
    amplitudes: list[float] = []
    phases: list[float] = []
    probs: list[float] = []
    points: list[ComplexPoint] = []
    for atom in atoms:
        amp, phase = atom.point.amplitude, atom.point.phase
        match = -1
        if points:
            kept_amp = np.asarray(amplitudes)
            gap = np.abs(np.asarray(phases) - phase)
            gap = np.minimum(gap, 2 * math.pi - gap)
            scale = np.maximum(kept_amp, amp)
            both_zero = scale == 0
            same = both_zero | ((np.abs(kept_amp - amp) <= tol * scale) & (gap <= tol))
            hits = np.flatnonzero(same)
            if hits.size:
                match = int(hits[0])
        if match < 0:
            amplitudes.append(amp)
            phases.append(phase)
            probs.append(atom.prob)
            points.append(atom.point)
        else:
            probs[match] += atom.prob
    return tuple(MassPoint(point, min(prob, 1.0)) for point, prob in zip(points, probs))


def entropy_bits(p) -> float:
    """Shannon entropy in bits, entries below 1e-300 count as exact zeros."""
    p = np.asarray(p, dtype=float)
    p = np.where(p < ENTROPY_FLOOR, 0.0, p)
    return float(np.sum(entr(p)) / LN2)


def _column_entropies(matrix: np.ndarray) -> np.ndarray:
    matrix = np.where(matrix < ENTROPY_FLOOR, 0.0, matrix)
    return np.sum(entr(matrix), axis=0) / LN2


def transition_matrix(q: PhaseQuantizer, points: Sequence[ComplexPoint]) -> np.ndarray:
    """
    Stack transition rows as columns: W[y, i] = P(Y = y | U = points[i]).

    Each phase is written theta_r + k * 2pi/2^b with theta_r in [0, 2pi/2^b);
    the row at theta is the row at theta_r shifted by k sectors, so only one
    quadrature row per distinct (alpha, theta_r) is ever computed.
    """
    matrix = np.empty((q.sectors, len(points)))
    for i, point in enumerate(points):
        shift, base = divmod(point.phase, q.width)
        if base >= q.width:
            shift, base = shift + 1, base - q.width
        row = transition_row(q, ComplexPoint(point.amplitude, base))
        matrix[:, i] = np.roll(row, int(shift) % q.sectors)
    return matrix


def output_distribution(q: PhaseQuantizer, F: InputDistribution) -> np.ndarray:
    return transition_matrix(q, F.points) @ F.probabilities


def cond_entropy_point(q: PhaseQuantizer, point: ComplexPoint) -> float:
    """H(Y | U = point) in bits."""
    return entropy_bits(transition_row(q, point))


def mutual_information(q: PhaseQuantizer, F: InputDistribution) -> RateReport:
    """
    I(F) = H(Y) - H(Y|U) for the discrete input F.

    :raises QuadratureError: propagated from the transition rows.
    """
    matrix = transition_matrix(q, F.points)
    probs = F.probabilities
    output_entropy = entropy_bits(matrix @ probs)
    conditional_entropy = float(np.dot(probs, _column_entropies(matrix)))
    return RateReport(output_entropy - conditional_entropy, output_entropy, conditional_entropy)


def capacity(params: ChannelParams) -> float:
    """
    Capacity in bits: b + sum_y W_y(P', pi/2^b) log2 W_y(P', pi/2^b).
    """
    q = params.quantizer
    bisector_point = ComplexPoint(math.sqrt(params.snr), q.bisector(0))
    return max(0.0, q.bits - cond_entropy_point(q, bisector_point))


def symmetrize(q: PhaseQuantizer, F: InputDistribution) -> InputDistribution:
    """
    Average F over the 2^b rotations by multiples of 2pi/2^b.

    Power is unchanged, H(Y) of the result is b and its rate is at least the
    rate of F.
    """
    atoms = [
        MassPoint(atom.point.rotated(k * q.width), atom.prob / q.sectors)
        for atom in F
        for k in range(q.sectors)
    ]
    return InputDistribution(tuple(atoms))


def psk_input(m: int, amplitude: float, rotation: float = 0.0) -> InputDistribution:
    """m equiprobable atoms at phases rotation + 2 pi k / m."""
    if m < 1:
        raise DomainError(f"PSK order must be >= 1, got {m}")
    if amplitude < 0:
        raise DomainError(f"amplitude must be nonnegative, got {amplitude}")
    points = [ComplexPoint(amplitude, rotation + 2 * math.pi * k / m) for k in range(m)]
    return InputDistribution.from_points(points, [1.0 / m] * m)


def gaussian_input(power: float, n_radii: int = 32, n_phases: int = 32) -> InputDistribution:
    """
    Complex Gaussian input discretized on an n_radii x n_phases polar grid.

    Radii are midpoint quantiles of the Rayleigh law, rescaled so the average
    power is exactly `power`; every grid point has weight 1 / (n_radii * n_phases).
    """
    if power < 0:
        raise DomainError(f"power must be nonnegative, got {power}")
    quantiles = (np.arange(n_radii) + 0.5) / n_radii
    squared = -np.log1p(-quantiles)
    squared *= power / squared.mean()
    radii = np.sqrt(squared)
    weight = 1.0 / (n_radii * n_phases)
    points = [
        ComplexPoint(float(r), 2 * math.pi * j / n_phases)
        for r in radii
        for j in range(n_phases)
    ]
    return InputDistribution.from_points(points, [weight] * len(points))


def denormalize(F_U: InputDistribution, params: ChannelParams) -> InputDistribution:
    """
    Map a normalized input U to the physical input X = sigma * U / g_LoS.

    :raises DomainError: g_LoS = 0.
    """
    gain = params.los_gain
    if gain == 0:
        raise DomainError("cannot denormalize through a zero line-of-sight gain")
    scale = params.noise_scale / abs(gain)
    shift = -math.atan2(gain.imag, gain.real)
    return InputDistribution(tuple(
        MassPoint(ComplexPoint(atom.point.amplitude * scale, atom.point.phase + shift), atom.prob)
        for atom in F_U
    ))


def kkt_gap(params: ChannelParams, theta: float) -> float:
    """
    C - b - sum_y W_y(P', theta) log2 W_y(P', theta).

    Nonnegative for every theta, zero on the support of the optimal input.
    """
    q = params.quantizer
    point = ComplexPoint(math.sqrt(params.snr), theta)
    return capacity(params) - q.bits + cond_entropy_point(q, point)
