"""
Adaptive Gauss-Legendre quadrature.

Each panel is integrated with a fixed-order Gauss-Legendre rule and compared
against the sum of its two halves. Panels whose halves disagree by more than
the tolerance are bisected again.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from numpy.polynomial.legendre import leggauss

from constants import ABSOLUTE_FLOOR, GAUSS_LEGENDRE_ORDER, MAX_PANEL_DEPTH, RELATIVE_TOLERANCE
from errors import NumericError, QuadratureError

Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=8)
def gauss_legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the order-point rule on [-1, 1], read-only."""
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_estimate(func: Integrand, lower: float, upper: float, order: int = GAUSS_LEGENDRE_ORDER) -> float:
    """
    Single-panel Gauss-Legendre estimate of the integral of func on [lower, upper].

    :complexity: O(order) evaluations of func, done in one vectorised call.
    """
    nodes, weights = gauss_legendre_rule(order)
    half = 0.5 * (upper - lower)
    mid = 0.5 * (upper + lower)
    return half * float(np.dot(weights, func(mid + half * nodes)))


def _split_estimates(func: Integrand, lower: float, upper: float, order: int) -> tuple[float, float]:
    """Estimates on both halves of [lower, upper] from one call to func."""
    nodes, weights = gauss_legendre_rule(order)
    quarter = 0.25 * (upper - lower)
    centres = np.array([lower + quarter, upper - quarter])
    values = func((centres[:, None] + quarter * nodes).ravel()).reshape(2, order)
    left, right = quarter * (values @ weights)
    return float(left), float(right)


def adaptive_gauss_legendre(
    func: Integrand,
    lower: float,
    upper: float,
    breakpoints: Iterable[float] = (),
    rel_tol: float = RELATIVE_TOLERANCE,
    abs_floor: float = ABSOLUTE_FLOOR,
    order: int = GAUSS_LEGENDRE_ORDER,
    max_depth: int = MAX_PANEL_DEPTH,
    min_depth: int = 1,
) -> float:
    """
    Integrate func over [lower, upper] by recursive panel bisection.

    The panels are processed with an explicit stack rather than recursion, left
    panel first, so the summation order (and the result) is fixed for a given
    input.

    :param func: vectorised integrand, maps an array of abscissae to values.
    :param breakpoints: interior points where the initial interval is split,
        typically the location of a sharp peak.
    :param rel_tol: a panel is accepted when its two halves agree with the
        whole within rel_tol times the refined value (or abs_floor).
    :param min_depth: panels are always bisected at least this many times.
    :raises QuadratureError: a panel still fails the test at max_depth.
    :raises NumericError: the integrand produced a non-finite value.
    :return: the integral estimate.

    :complexity: O(P * order) integrand evaluations for P accepted panels.
    """
    if upper < lower:
        raise ValueError("Integration limits must be in increasing order.")
    edges = [lower] + sorted(p for p in breakpoints if lower < p < upper) + [upper]

    stack = []
    for a, b in reversed(list(zip(edges[:-1], edges[1:]))):
        stack.append((a, b, panel_estimate(func, a, b, order), 0))

    total = 0.0
    while stack:
        a, b, estimate, depth = stack.pop()
        mid = 0.5 * (a + b)
        left, right = _split_estimates(func, a, b, order)
        refined = left + right
        if not np.isfinite(refined):
            raise NumericError(f"non-finite integrand on [{a:.6g}, {b:.6g}]")
        residual = abs(refined - estimate)
        if depth + 1 >= min_depth and residual <= max(rel_tol * abs(refined), abs_floor):
            total += refined
        elif depth >= max_depth:
            raise QuadratureError(a, b, residual)
        else:
            # Right half first so the left half is summed first.
            stack.append((mid, b, right, depth + 1))
            stack.append((a, mid, left, depth + 1))
    return total
