"""
Phase quantizer geometry and the transition probabilities of the
phase-quantized complex AWGN channel.

The channel is used in its normalized form: the receiver sees u + Z with Z
circularly-symmetric complex Gaussian of total variance 1, so an input of
amplitude sqrt(alpha) has SNR alpha.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import erfc, erfcx

from algorithms.quadrature import adaptive_gauss_legendre
from constants import RELATIVE_TOLERANCE
from errors import DomainError, UndefinedPhaseError
from monte_carlo import STREAM_TRANSITION, map_chunks
from utils import reduce_phase

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class PhaseQuantizer:
    """
    b-bit phase quantizer.

    Sector y covers the half-open angular interval
    [2*pi*y / 2^b, 2*pi*(y+1) / 2^b).
    """

    bits: int

    def __post_init__(self) -> None:
        if isinstance(self.bits, bool) or not isinstance(self.bits, (int, np.integer)) or self.bits < 1:
            raise DomainError(f"quantizer needs an integer number of bits >= 1, got {self.bits!r}")

    @property
    def sectors(self) -> int:
        return 2 ** self.bits

    @property
    def width(self) -> float:
        return TWO_PI / self.sectors

    def lower_edge(self, y: int) -> float:
        return self.width * y

    def upper_edge(self, y: int) -> float:
        return self.width * (y + 1)

    def bisector(self, y: int = 0) -> float:
        return self.width * (y + 0.5)

    def check_sector(self, y: int) -> None:
        if not 0 <= y < self.sectors:
            raise DomainError(f"sector {y} outside 0..{self.sectors - 1}")

    def reflect_about_bisector(self, y: int) -> int:
        """Sector hit by reflecting sector y about the sector-0 bisector."""
        return (-y) % self.sectors

    def reflect_about_zero(self, y: int) -> int:
        """Sector hit by reflecting sector y about angle 0."""
        return self.sectors - 1 - y


@dataclass(frozen=True)
class ComplexPoint:
    """
    Channel input sqrt(alpha) * exp(j*theta), phase stored in [0, 2*pi).
    """

    amplitude: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise DomainError(f"amplitude must be finite and nonnegative, got {self.amplitude}")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "phase", reduce_phase(self.phase))

    @classmethod
    def from_alpha(cls, alpha: float, theta: float) -> ComplexPoint:
        if alpha < 0:
            raise DomainError(f"alpha must be nonnegative, got {alpha}")
        return cls(math.sqrt(alpha), theta)

    @classmethod
    def from_complex(cls, z: complex) -> ComplexPoint:
        return cls(abs(z), cmath.phase(z) if z != 0 else 0.0)

    @property
    def alpha(self) -> float:
        return self.amplitude ** 2

    @property
    def value(self) -> complex:
        return cmath.rect(self.amplitude, self.phase)

    def rotated(self, angle: float) -> ComplexPoint:
        return ComplexPoint(self.amplitude, self.phase + angle)


@dataclass(frozen=True)
class ChannelParams:
    """
    Normalized channel parameters.

    snr is P' = |g_LoS|^2 * P / sigma^2, the only knob the capacity depends
    on; los_gain and noise_scale are kept to map inputs back to the physical
    channel.
    """

    snr: float
    bits: int
    los_gain: complex = 1.0 + 0.0j
    noise_scale: float = 1.0
    quantizer: PhaseQuantizer = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.snr) or self.snr < 0:
            raise DomainError(f"snr must be finite and nonnegative, got {self.snr}")
        if not self.noise_scale > 0:
            raise DomainError(f"noise_scale must be positive, got {self.noise_scale}")
        object.__setattr__(self, "los_gain", complex(self.los_gain))
        object.__setattr__(self, "quantizer", PhaseQuantizer(self.bits))

    @classmethod
    def from_physical(cls, power: float, bits: int, los_gain: complex = 1.0, noise_scale: float = 1.0) -> ChannelParams:
        """Build the normalized parameters from the average power constraint P."""
        if power < 0:
            raise DomainError(f"power must be nonnegative, got {power}")
        return cls(abs(los_gain) ** 2 * power / noise_scale ** 2, bits, los_gain, noise_scale)

    @property
    def physical_power(self) -> float:
        if self.los_gain == 0:
            raise DomainError("los_gain = 0 has no physical power equivalent")
        return self.snr * self.noise_scale ** 2 / abs(self.los_gain) ** 2


def sector_of(z: complex, q: PhaseQuantizer) -> int:
    """
    Quantizer output for the received sample z.

    :raises UndefinedPhaseError: z = 0.
    """
    if z == 0:
        raise UndefinedPhaseError()
    return int(sectors_of(np.asarray([z]), q)[0])


def sectors_of(z: np.ndarray, q: PhaseQuantizer) -> np.ndarray:
    """
    Vectorised sector_of. Exact zeros are mapped to sector 0 here; they have
    probability zero under continuous noise.
    """
    angle = np.mod(np.angle(z), TWO_PI)
    index = np.floor(angle * (q.sectors / TWO_PI)).astype(np.int64)
    # angle can round up to exactly 2*pi
    return np.minimum(index, q.sectors - 1)


def angular_phase_pdf(alpha: float, phi):
    """
    Density of arg(sqrt(alpha) + Z) measured from the signal phase.

    f(phi) = e^-alpha / (2 pi) + sqrt(alpha/pi) cos(phi) e^(-alpha sin^2 phi) Phi(sqrt(2 alpha) cos phi)

    Where cos(phi) < 0 the Gaussian CDF factor is a deep tail, so the product
    is evaluated as e^-alpha * erfcx(.) / 2 to keep it finite for large alpha.

    :raises DomainError: alpha < 0.
    """
    if alpha < 0 or not math.isfinite(alpha):
        raise DomainError(f"alpha must be finite and nonnegative, got {alpha}")
    scalar = np.ndim(phi) == 0
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    cos_phi = np.cos(phi)
    x = math.sqrt(alpha) * cos_phi
    uniform = math.exp(-alpha) / TWO_PI

    density = np.empty_like(phi)
    ahead = x >= 0
    xa = x[ahead]
    density[ahead] = uniform + xa / math.sqrt(math.pi) * np.exp(-alpha * np.sin(phi[ahead]) ** 2) * 0.5 * erfc(-xa)
    xb = x[~ahead]
    density[~ahead] = math.exp(-alpha) * (1 / TWO_PI + xb / math.sqrt(math.pi) * 0.5 * erfcx(-xb))
    np.maximum(density, 0.0, out=density)
    return float(density[0]) if scalar else density


def transition_prob(q: PhaseQuantizer, alpha: float, theta: float, y: int, rel_tol: float = RELATIVE_TOLERANCE) -> float:
    """
    W_y(alpha, theta): probability that input sqrt(alpha) e^(j theta) lands in sector y.

    Integrates angular_phase_pdf over the sector, split at the signal
    direction when it falls inside the sector.

    :raises QuadratureError: panel subdivision cap reached.
    """
    q.check_sector(y)
    if alpha < 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha}")
    lower = q.lower_edge(y)
    upper = q.upper_edge(y)
    peak = lower + (theta - lower) % TWO_PI
    value = adaptive_gauss_legendre(
        lambda phi: angular_phase_pdf(alpha, phi - theta),
        lower,
        upper,
        breakpoints=(peak,),
        rel_tol=rel_tol,
    )
    return min(max(value, 0.0), 1.0)


@lru_cache(maxsize=1 << 16)
def _cached_row(bits: int, alpha: float, theta: float) -> tuple[float, ...]:
    q = PhaseQuantizer(bits)
    return tuple(transition_prob(q, alpha, theta, y) for y in range(q.sectors))


def transition_row(q: PhaseQuantizer, point: ComplexPoint) -> np.ndarray:
    """
    All 2^b transition probabilities for one input point.

    Rows are memoised on (bits, alpha, theta); the returned array is a fresh copy.
    """
    return np.array(_cached_row(q.bits, point.alpha, point.phase))


def mc_transition_oracle(
    q: PhaseQuantizer,
    point: ComplexPoint,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> np.ndarray:
    """
    Empirical sector frequencies of point + Z over n_samples draws.

    The draws are split into fixed-size chunks with seeds derived from
    (seed, chunk index), so the result does not depend on workers.
    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be >= 1, got {n_samples}")
    centre = point.value

    def count_chunk(rng: np.random.Generator, size: int) -> np.ndarray:
        noise = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2)
        return np.bincount(sectors_of(centre + noise, q), minlength=q.sectors)

    counts = np.zeros(q.sectors, dtype=np.int64)
    for chunk in map_chunks(count_chunk, n_samples, seed, STREAM_TRANSITION, workers=workers):
        counts += chunk
    logger.debug("sampling oracle b=%d alpha=%.6g theta=%.6g: %d draws", q.bits, point.alpha, point.phase, n_samples)
    return counts / n_samples


def oracle_standard_error(freq: np.ndarray, n_samples: int) -> np.ndarray:
    """Binomial standard error of each empirical frequency."""
    freq = np.asarray(freq, dtype=float)
    return np.sqrt(freq * (1 - freq) / n_samples)
