"""Independent oracles used by the test suite.

These deliberately avoid the implementation paths they check: the SGM
oracle integrates the defining expectation numerically, and the gradient
oracle uses central finite differences.
"""

import math

import numpy as np
from scipy import integrate


def sgm_rdp_quadrature(q: float, sigma: float, alpha: float) -> float:
    """RDP of one SGM step via adaptive quadrature of E_{phi1}[(phi2/phi1)^alpha].

    phi1 = N(0, sigma^2), phi2 = (1-q) N(0, sigma^2) + q N(1, sigma^2).
    Works in log space: the integrand is rescaled by its maximum so the
    quadrature stays finite at large alpha / small sigma.
    """
    if q == 0:
        return 0.0
    s2 = sigma * sigma
    log_q, log_1mq = math.log(q), (math.log1p(-q) if q < 1 else -math.inf)

    def log_f(x):
        t = (2.0 * x - 1.0) / (2.0 * s2)
        ratio = np.logaddexp(log_1mq, log_q + t) if q < 1 else log_q + t
        return -0.5 * np.log(2 * np.pi * s2) - x * x / (2 * s2) + alpha * ratio

    lo = -40.0 * sigma - 2.0
    hi = alpha + 40.0 * sigma + 2.0
    grid = np.linspace(lo, hi, 20001)
    values = log_f(grid)
    m = float(values.max())
    peaks = [float(grid[i]) for i in range(1, len(grid) - 1)
             if values[i] >= values[i - 1] and values[i] >= values[i + 1]
             and values[i] > m - 60.0]
    integral, _ = integrate.quad(lambda x: math.exp(log_f(x) - m), lo, hi,
                                 points=sorted(set(peaks)), limit=500)
    return (m + math.log(integral)) / (alpha - 1.0)


def numeric_gradient(f, x: np.ndarray, indices, step: float = 1e-5) -> dict:
    """Central finite differences of scalar f at selected indices of x."""
    out = {}
    for idx in indices:
        xp = x.copy()
        xp[idx] += step
        xm = x.copy()
        xm[idx] -= step
        out[idx] = (f(xp) - f(xm)) / (2.0 * step)
    return out


def relative_error(a: float, b: float, floor: float = 1e-6) -> float:
    return abs(a - b) / max(floor, abs(a), abs(b))
