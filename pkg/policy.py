from __future__ import annotations

import logging
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from constants import RATE_TABLE_SIZE
from data_structures.rate_table import RateTable
from errors import DomainError
from info_metrics import capacity, mutual_information, psk_input
from quantizer import ChannelParams, PhaseQuantizer
from utils import lcm

logger = logging.getLogger(__name__)


class RatePolicy(ABC):
    """
    How the transmitter signals over one fading realization h, with h known
    at the receiver only.
    """

    @property
    @abstractmethod
    def name(self) -> str:
        raise NotImplementedError()

    @abstractmethod
    def rate(self, q: PhaseQuantizer, gain: complex, rho: float) -> float:
        """Instantaneous rate in bits for channel gain h at average SNR rho."""
        raise NotImplementedError()

    @abstractmethod
    def outage_mask(self, q: PhaseQuantizer, gains: np.ndarray, rho: float, rate_target: float) -> np.ndarray:
        """Boolean array, True where the rate for gains[i] falls below rate_target."""
        raise NotImplementedError()

    def prepare(self, q: PhaseQuantizer, workers: int = 1) -> None:
        """Build whatever outage_mask reads, before it is called from worker threads."""


@dataclass(frozen=True)
class FixedPsk(RatePolicy):
    """
    Equiprobable m-PSK at full power with a fixed transmit rotation; the
    channel phase turns it relative to the quantizer.
    """

    order: int
    rotation: float = 0.0
    table_size: tuple[int, int] = RATE_TABLE_SIZE

    def __post_init__(self) -> None:
        if self.order < 1:
            raise DomainError(f"PSK order must be >= 1, got {self.order}")

    @property
    def name(self) -> str:
        return f"fixed-psk:{self.order}:{self.rotation:.17g}"

    def rate(self, q: PhaseQuantizer, gain: complex, rho: float) -> float:
        if rho < 0:
            raise DomainError(f"rho must be nonnegative, got {rho}")
        amplitude = math.sqrt(rho) * abs(gain)
        offset = self.rotation + math.atan2(gain.imag, gain.real)
        return mutual_information(q, psk_input(self.order, amplitude, offset)).mutual_information

    def table(self, q: PhaseQuantizer, workers: int = 1) -> RateTable:
        return _psk_rate_table(q.bits, self.order, self.table_size, workers)

    def prepare(self, q: PhaseQuantizer, workers: int = 1) -> None:
        self.table(q, workers)

    def outage_mask(self, q: PhaseQuantizer, gains: np.ndarray, rho: float, rate_target: float) -> np.ndarray:
        gains = np.asarray(gains)
        if rate_target <= 0:
            return np.zeros(gains.shape, dtype=bool)
        if rate_target >= q.bits:
            return np.ones(gains.shape, dtype=bool)
        rates = self.table(q)(rho * np.abs(gains) ** 2, self.rotation + np.angle(gains))
        return rates < rate_target


@dataclass(frozen=True)
class GenieRotatedCapacity(RatePolicy):
    """Per-realization capacity, as if the transmitter could derotate."""

    @property
    def name(self) -> str:
        return "genie"

    def rate(self, q: PhaseQuantizer, gain: complex, rho: float) -> float:
        if rho < 0:
            raise DomainError(f"rho must be nonnegative, got {rho}")
        return capacity(ChannelParams(rho * abs(gain) ** 2, q.bits))

    def outage_mask(self, q: PhaseQuantizer, gains: np.ndarray, rho: float, rate_target: float) -> np.ndarray:
        # capacity is increasing in the received SNR, so the outage event is a gain threshold
        from fading_outage import rate_threshold_gain

        gains = np.asarray(gains)
        if rate_target <= 0:
            return np.zeros(gains.shape, dtype=bool)
        if rate_target >= q.bits:
            return np.ones(gains.shape, dtype=bool)
        return rho * np.abs(gains) ** 2 < rate_threshold_gain(q, rate_target)


_TABLES: dict[tuple[int, int, tuple[int, int]], RateTable] = {}
_TABLES_LOCK = threading.Lock()


def _psk_rate_table(bits: int, order: int, size: tuple[int, int], workers: int = 1) -> RateTable:
    """One shared table per (bits, order, size). Concurrent callers wait for the first build."""
    key = (bits, order, tuple(size))
    with _TABLES_LOCK:
        if key not in _TABLES:
            logger.info("building the %d-PSK rate table for b=%d", order, bits)
            _TABLES[key] = _build_psk_rate_table(bits, order, key[2], workers)
        return _TABLES[key]


def _build_psk_rate_table(bits: int, order: int, size: tuple[int, int], workers: int) -> RateTable:
    q = PhaseQuantizer(bits)

    # I is periodic in the offset with period 2pi / lcm(m, 2^b) and even about 0
    def rate_fn(gain: float, offset: float) -> float:
        return mutual_information(q, psk_input(order, math.sqrt(gain), offset)).mutual_information

    return RateTable.build_validated(rate_fn, 2 * math.pi / lcm(order, q.sectors), size, workers=workers)


def parse_policy(text: str) -> RatePolicy:
    """
    Parse "genie" or "fixed-psk:<m>[:<rotation>]".

    A missing rotation defaults to pi/m, which for m = 2^b puts the
    constellation on the sector bisectors.
    """
    parts = text.strip().lower().split(":")
    if parts == ["genie"]:
        return GenieRotatedCapacity()
    if parts[0] == "fixed-psk" and len(parts) in (2, 3):
        try:
            order = int(parts[1])
            rotation = float(parts[2]) if len(parts) == 3 else math.pi / order
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"bad policy {text!r}") from None
        return FixedPsk(order, rotation)
    raise DomainError(f"unknown policy {text!r}, expected 'genie' or 'fixed-psk:<m>[:<rotation>]'")
