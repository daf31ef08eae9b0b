from __future__ import annotations

import math

import numpy as np


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)

def linear_to_db(value):
    return 10.0 * np.log10(value)

def reduce_phase(theta: float) -> float:
    """
    Reduce an angle to [0, 2*pi).

    np.mod can round a tiny negative angle up to exactly 2*pi, which is
    folded back to 0.
    """
    reduced = float(np.mod(theta, 2 * math.pi))
    if reduced >= 2 * math.pi:
        return 0.0
    return reduced

def lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)
