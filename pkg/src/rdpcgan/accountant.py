"""Rényi-DP accountant for the Sampled Gaussian Mechanism.

Per-step Rényi divergence bounds are computed in closed form at integer
orders, composed additively over steps and across the autoencoder + GAN
pipeline, and converted to an (epsilon, delta) guarantee by minimizing
over the order grid. All functions are pure; everything is evaluated in
log space so large orders stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BudgetError

DEFAULT_ORDERS: tuple[int, ...] = tuple(range(2, 257))

MAX_CALIBRATION_STEPS = 1 << 40


@dataclass(frozen=True)
class RdpCurve:
    """epsilon(alpha) on an ascending grid of Rényi orders (all > 1)."""

    orders: tuple[float, ...]
    epsilons: tuple[float, ...]

    def __post_init__(self):
        if len(self.orders) != len(self.epsilons):
            raise BudgetError("orders and epsilons must have the same length")
        if not self.orders:
            raise BudgetError("RdpCurve must hold at least one order")
        if any(a <= 1 for a in self.orders):
            raise BudgetError("all Rényi orders must exceed 1")
        if any(not math.isfinite(e) or e < 0 for e in self.epsilons):
            raise BudgetError("all stored epsilons must be finite and >= 0")

    def scaled(self, steps: int) -> "RdpCurve":
        return RdpCurve(self.orders, tuple(steps * e for e in self.epsilons))

    def added(self, other: "RdpCurve") -> "RdpCurve":
        if self.orders != other.orders:
            raise BudgetError("cannot add RDP curves on different order grids")
        return RdpCurve(self.orders, tuple(a + b for a, b in zip(self.epsilons, other.epsilons)))


@dataclass(frozen=True)
class SgmParams:
    """Sampled Gaussian Mechanism parameters (sensitivity normalized to 1)."""

    q: float
    sigma: float
    steps: int

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise BudgetError(f"sampling rate q={self.q} must lie in [0, 1]")
        if self.sigma < 0:
            raise BudgetError(f"noise multiplier sigma={self.sigma} must be >= 0")
        if self.steps < 0:
            raise BudgetError(f"step count {self.steps} must be >= 0")


@dataclass(frozen=True)
class DpGuarantee:
    epsilon: float
    delta: float
    alpha_star: float


def _log_add(log_x: float, log_y: float) -> float:
    a, b = min(log_x, log_y), max(log_x, log_y)
    if a == -math.inf:
        return b
    return math.log1p(math.exp(a - b)) + b


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def sgm_rdp_step(q: float, sigma: float, alpha) -> float:
    """RDP epsilon of one SGM step at integer order alpha >= 2.

    Evaluates log A(alpha) = log sum_j C(alpha, j) (1-q)^(alpha-j) q^j
    exp((j^2 - j) / (2 sigma^2)) via log-sum-exp, then divides by
    (alpha - 1). A subsampling rate of zero costs nothing at any sigma.
    """
    if alpha < 2 or alpha != int(alpha):
        raise BudgetError(f"unsupported Rényi order {alpha}: need an integer >= 2")
    alpha = int(alpha)
    if not 0.0 <= q <= 1.0:
        raise BudgetError(f"sampling rate q={q} must lie in [0, 1]")
    if q == 0.0:
        return 0.0
    if sigma <= 0.0:
        raise BudgetError(f"noise multiplier sigma={sigma} must be > 0 when q > 0")
    if q == 1.0:
        return alpha / (2.0 * sigma ** 2)
    log_q = math.log(q)
    log_1mq = math.log1p(-q)
    log_a = -math.inf
    for j in range(alpha + 1):
        term = (_log_comb(alpha, j) + (alpha - j) * log_1mq + j * log_q
                + (j * j - j) / (2.0 * sigma ** 2))
        log_a = _log_add(log_a, term)
    return log_a / (alpha - 1)


def sgm_rdp_curve(q: float, sigma: float, orders=DEFAULT_ORDERS) -> RdpCurve:
    """Per-step RDP curve over an order grid."""
    return RdpCurve(tuple(float(a) for a in orders),
                    tuple(sgm_rdp_step(q, sigma, a) for a in orders))


def compose_steps(step_curve: RdpCurve, steps: int) -> RdpCurve:
    """RDP of `steps` identical steps: pointwise epsilon * steps."""
    if steps < 0:
        raise BudgetError(f"step count {steps} must be >= 0")
    return step_curve.scaled(steps)


def rdp_to_dp(curve: RdpCurve, delta: float) -> DpGuarantee:
    """Best (epsilon, delta) conversion over the stored order grid."""
    if not 0.0 < delta < 1.0:
        raise BudgetError(f"delta={delta} must lie in (0, 1)")
    log_inv_delta = math.log(1.0 / delta)
    best_eps = math.inf
    best_alpha = curve.orders[0]
    for alpha, eps in zip(curve.orders, curve.epsilons):
        candidate = eps + log_inv_delta / (alpha - 1)
        if candidate < best_eps:
            best_eps = candidate
            best_alpha = alpha
    return DpGuarantee(best_eps, delta, best_alpha)


@dataclass(frozen=True)
class ComposedBudget:
    alpha_total: float
    epsilon_total_rdp: float
    guarantee: DpGuarantee


def compose_two_systems(curve_a: RdpCurve, curve_b: RdpCurve, delta: float) -> ComposedBudget:
    """Compose two mechanisms sharing an order grid and convert to DP.

    The shared order is fixed by minimizing the converted DP epsilon of
    the summed curve over the grid, which is never worse than fixing the
    order from either system alone.
    """
    total = curve_a.added(curve_b)
    guarantee = rdp_to_dp(total, delta)
    idx = total.orders.index(guarantee.alpha_star)
    return ComposedBudget(guarantee.alpha_star, total.epsilons[idx], guarantee)


def _converted_epsilon(step_curve: RdpCurve, steps: int, delta: float) -> float:
    return rdp_to_dp(step_curve.scaled(steps), delta).epsilon


def calibrate(target_epsilon: float, delta: float, q: float, *,
              sigma: float | None = None, steps: int | None = None,
              orders=DEFAULT_ORDERS,
              sigma_grid_start: float = 0.3, sigma_grid_factor: float = 1.02,
              sigma_grid_stop: float = 200.0) -> SgmParams:
    """Solve one SGM parameter against a privacy target.

    With ``sigma`` given: binary-search the largest step count whose
    composed-and-converted epsilon stays within the target (the converted
    epsilon is nondecreasing in the step count). With ``steps`` given:
    scan a geometric sigma grid upward and return the smallest sigma
    meeting the target.
    """
    if target_epsilon <= 0:
        raise BudgetError(f"target epsilon {target_epsilon} must be > 0")
    if (sigma is None) == (steps is None):
        raise BudgetError("calibrate needs exactly one of sigma (max-steps mode) "
                          "or steps (sigma mode)")

    if sigma is not None:
        step_curve = sgm_rdp_curve(q, sigma, orders)
        if _converted_epsilon(step_curve, 0, delta) > target_epsilon:
            raise BudgetError(
                f"target epsilon {target_epsilon} is below the delta conversion floor "
                f"{_converted_epsilon(step_curve, 0, delta):.6g} at zero steps")
        if max(step_curve.epsilons) == 0.0:
            return SgmParams(q, sigma, MAX_CALIBRATION_STEPS)
        lo = 0
        hi = 1
        while (hi < MAX_CALIBRATION_STEPS
               and _converted_epsilon(step_curve, hi, delta) <= target_epsilon):
            lo = hi
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _converted_epsilon(step_curve, mid, delta) <= target_epsilon:
                lo = mid
            else:
                hi = mid
        return SgmParams(q, sigma, lo)

    grid = [sigma_grid_start]
    while grid[-1] < sigma_grid_stop:
        grid.append(grid[-1] * sigma_grid_factor)
    for s in grid:
        try:
            curve = sgm_rdp_curve(q, s, orders)
        except BudgetError:
            continue
        if _converted_epsilon(curve, steps, delta) <= target_epsilon:
            return SgmParams(q, s, steps)
    raise BudgetError(
        f"no sigma <= {sigma_grid_stop} meets epsilon={target_epsilon} at {steps} steps")


@dataclass
class Accountant:
    """Running RDP total for one mechanism with fixed (q, sigma)."""

    q: float
    sigma: float
    orders: tuple[float, ...] = DEFAULT_ORDERS
    steps: int = 0
    step_curve: RdpCurve = field(init=False)

    def __post_init__(self):
        self.orders = tuple(float(a) for a in self.orders)
        self.step_curve = sgm_rdp_curve(self.q, self.sigma, self.orders)

    def record_step(self, count: int = 1) -> None:
        self.steps += count

    def curve(self, steps: int | None = None) -> RdpCurve:
        return self.step_curve.scaled(self.steps if steps is None else steps)

    def guarantee(self, delta: float) -> DpGuarantee:
        return rdp_to_dp(self.curve(), delta)
