from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from constants import (
    RATE_TABLE_MAX_DOUBLINGS,
    RATE_TABLE_MAX_GAIN,
    RATE_TABLE_MIN_GAIN,
    RATE_TABLE_MIN_OFFSET,
    RATE_TABLE_SIZE,
    RATE_TABLE_TOLERANCE,
    RATE_TABLE_VALIDATION_POINTS,
)
from errors import DomainError
from monte_carlo import STREAM_VALIDATION, chunk_generator

logger = logging.getLogger(__name__)

RateFunction = Callable[[float, float], float]


class RateTable:
    """
    Rate lookup table over two keys: the received SNR rho|h|^2 and the phase
    offset of the constellation relative to the quantizer.

    Key Types:
        - gain:     nonnegative real, linear. The axis is 0 followed by a
                    log-spaced range and interpolation runs in log(gain + min_gain);
                    lookups above the range are clamped.
        - offset:   real, radians. The rate must be periodic in the offset and
                    even about 0, so offsets are folded onto [0, period / 2].
                    The axis is 0 followed by a log-spaced range, dense where
                    constellation points sit on sector edges.

    The table is immutable once built and may be shared between threads.
    Lookups are bilinear, O(1) per query.
    """

    def __init__(
        self,
        gains: np.ndarray,
        offsets: np.ndarray,
        rates: np.ndarray,
        period: float,
        min_gain: float = RATE_TABLE_MIN_GAIN,
    ) -> None:
        """
        Parameters:
        ----------
        gains : increasing gain axis, starting at 0.
        offsets : increasing folded offset axis covering [0, period / 2].
        rates : rates[i, j] at (gains[i], offsets[j]), in bits.
        period : offset period in radians.
        min_gain : smallest positive gain, sets the log coordinate.
        """
        if rates.shape != (len(gains), len(offsets)):
            raise DomainError(f"rate grid shape {rates.shape} does not match the axes")
        self.gains = np.asarray(gains, dtype=float)
        self.offsets = np.asarray(offsets, dtype=float)
        self.rates = np.asarray(rates, dtype=float)
        self.period = float(period)
        self.min_gain = float(min_gain)
        for array in (self.gains, self.offsets, self.rates):
            array.setflags(write=False)
        self._interpolator = RegularGridInterpolator(
            (self._gain_coordinate(self.gains), self.offsets),
            self.rates,
            method="linear",
            bounds_error=False,
            fill_value=None,
        )

    @classmethod
    def build(
        cls,
        rate_fn: RateFunction,
        period: float,
        size: tuple[int, int] = RATE_TABLE_SIZE,
        min_gain: float = RATE_TABLE_MIN_GAIN,
        max_gain: float = RATE_TABLE_MAX_GAIN,
        workers: int = 1,
    ) -> RateTable:
        """
        Tabulate rate_fn on a (size[0] gains) x (size[1] offsets) grid, one
        gain row per task over `workers` threads.

        :complexity: size[0] * size[1] evaluations of rate_fn.
        """
        n_gain, n_offset = size
        if n_gain < 3 or n_offset < 3:
            raise DomainError(f"rate table too small: {size}")
        if not 0 < min_gain < max_gain:
            raise DomainError(f"bad gain range [{min_gain}, {max_gain}]")
        if not period > 0:
            raise DomainError(f"offset period must be positive, got {period}")
        half = 0.5 * period
        gains = np.concatenate(([0.0], np.geomspace(min_gain, max_gain, n_gain - 1)))
        offsets = np.concatenate(([0.0], np.geomspace(RATE_TABLE_MIN_OFFSET * half, half, n_offset - 1)))

        def row(gain: float) -> list[float]:
            return [rate_fn(float(gain), float(offset)) for offset in offsets]

        if workers <= 1:
            rows = [row(gain) for gain in gains]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(row, gains))
        return cls(gains, offsets, np.array(rows), period, min_gain)

    @classmethod
    def build_validated(
        cls,
        rate_fn: RateFunction,
        period: float,
        size: tuple[int, int] = RATE_TABLE_SIZE,
        tol: float = RATE_TABLE_TOLERANCE,
        max_doublings: int = RATE_TABLE_MAX_DOUBLINGS,
        n_validation: int = RATE_TABLE_VALIDATION_POINTS,
        seed: int = 0,
        workers: int = 1,
    ) -> RateTable:
        """
        Build a table and double its resolution until the interpolation error
        on a random validation sample is below tol bits.

        Gives up after max_doublings with a warning, keeping the finest table.
        """
        rng = chunk_generator(seed, STREAM_VALIDATION, 0)
        sample_gains = np.exp(rng.uniform(math.log(RATE_TABLE_MIN_GAIN), math.log(RATE_TABLE_MAX_GAIN), n_validation))
        sample_offsets = rng.uniform(0.0, 0.5 * period, n_validation)
        exact = np.array([rate_fn(float(g), float(o)) for g, o in zip(sample_gains, sample_offsets)])

        n_gain, n_offset = size
        for doubling in range(max_doublings + 1):
            table = cls.build(rate_fn, period, (n_gain, n_offset), workers=workers)
            error = float(np.max(np.abs(table(sample_gains, sample_offsets) - exact)))
            logger.info("rate table %dx%d: max validation error %.3e bits", n_gain, n_offset, error)
            if error < tol:
                return table
            if doubling < max_doublings:
                n_gain, n_offset = 2 * n_gain, 2 * n_offset
        logger.warning(
            "rate table %dx%d misses the %.1e bit tolerance (error %.3e)", n_gain, n_offset, tol, error,
        )
        return table

    @property
    def shape(self) -> tuple[int, int]:
        return self.rates.shape

    def _gain_coordinate(self, gain: np.ndarray) -> np.ndarray:
        return np.log(gain + self.min_gain)

    def fold(self, offset) -> np.ndarray:
        """Map offsets onto [0, period / 2]."""
        reduced = np.mod(np.asarray(offset, dtype=float), self.period)
        return np.minimum(reduced, self.period - reduced)

    def __call__(self, gain, offset) -> np.ndarray:
        """Interpolated rates for arrays of (gain, offset) queries."""
        gain = np.clip(np.asarray(gain, dtype=float), 0.0, self.gains[-1])
        gain, offset = np.broadcast_arrays(gain, self.fold(offset))
        queries = np.column_stack((self._gain_coordinate(gain.ravel()), offset.ravel()))
        return self._interpolator(queries).reshape(gain.shape)
