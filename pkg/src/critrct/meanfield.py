"""Mean-field signal propagation for fully-connected ReLU networks with dropout.

Wide random networks with i.i.d. Gaussian weights (variance ``sigma_w_sq / fan_in``),
Gaussian biases (variance ``sigma_b_sq``) and inverted Bernoulli dropout at rate
``theta`` have pre-activation moments that evolve deterministically from layer to
layer. This module implements those recurrences, the critical initialisation that
makes the variance map an identity, the converged correlation and the two depth
scales derived from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SignalOverflowError

__all__ = [
    "HyperParams",
    "SignalState",
    "FloatLimits",
    "DepthScales",
    "critical_init",
    "g_map",
    "correlation_map",
    "correlation_slope",
    "variance_step",
    "correlation_step",
    "input_layer_step",
    "propagate",
    "rho_star",
    "correlation_depth_scale",
    "variance_depth_bound",
    "depth_scales",
]


def _check_theta(theta):
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {theta!r}")


@dataclass(frozen=True)
class HyperParams:
    """Weight-variance scale, bias variance and dropout rate of a network."""

    sigma_w_sq: float
    sigma_b_sq: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.sigma_w_sq > 0:
            raise ValueError(f"sigma_w_sq must be positive, got {self.sigma_w_sq!r}")
        if not self.sigma_b_sq >= 0:
            raise ValueError(f"sigma_b_sq must be non-negative, got {self.sigma_b_sq!r}")
        _check_theta(self.theta)

    @property
    def gain(self):
        """Per-layer multiplier of the variance map, ``sigma_w^2 / (2(1 - theta))``."""
        return self.sigma_w_sq / (2.0 * (1.0 - self.theta))


@dataclass(frozen=True)
class SignalState:
    """Second moments of the pre-activations of two inputs at one layer."""

    nu1: float
    nu2: float
    kappa: float
    rho: float

    def __post_init__(self):
        if not (self.nu1 > 0 and self.nu2 > 0):
            raise ValueError(f"variances must be positive, got {self.nu1!r}, {self.nu2!r}")
        if abs(self.rho) > 1.0 + 1e-12:
            raise ValueError(f"correlation must lie in [-1, 1], got {self.rho!r}")
        implied = self.kappa / math.sqrt(self.nu1 * self.nu2)
        if abs(implied - self.rho) > 1e-12 * max(1.0, abs(implied)):
            raise ValueError(f"rho={self.rho!r} inconsistent with kappa/sqrt(nu1*nu2)={implied!r}")

    @classmethod
    def from_moments(cls, nu1, nu2, kappa):
        rho = kappa / math.sqrt(nu1 * nu2)
        return cls(nu1, nu2, kappa, min(1.0, max(-1.0, rho)))

    @classmethod
    def from_inputs(cls, x1, x2):
        """Moments of two raw input vectors: ``x.x / D`` and ``x1.x2 / D``."""
        x1 = np.asarray(x1, dtype=np.float64).ravel()
        x2 = np.asarray(x2, dtype=np.float64).ravel()
        if x1.shape != x2.shape:
            raise ValueError(f"inputs differ in dimension: {x1.shape} vs {x2.shape}")
        d = x1.size
        return cls.from_moments(float(x1 @ x1) / d, float(x2 @ x2) / d, float(x1 @ x2) / d)


@dataclass(frozen=True)
class FloatLimits:
    """Smallest and largest positive representable values (defaults: IEEE single)."""

    alpha: float = 1.1754944e-38
    beta: float = 3.4028235e38

    def __post_init__(self):
        if not 0 < self.alpha < 1 < self.beta:
            raise ValueError(f"need 0 < alpha < 1 < beta, got {self.alpha!r}, {self.beta!r}")

    @classmethod
    def for_dtype(cls, dtype):
        info = np.finfo(dtype)
        return cls(float(info.tiny), float(info.max))


@dataclass(frozen=True)
class DepthScales:
    ell_nu: float
    ell_rho: float
    rho_star: float


def critical_init(theta):
    """The variance-preserving initialisation ``(2(1 - theta), 0)``; He init at ``theta=0``."""
    _check_theta(theta)
    return HyperParams(2.0 * (1.0 - theta), 0.0, theta)


def g_map(rho):
    """``(rho*asin(rho) + sqrt(1 - rho^2)) / (pi*rho)``.

    Singular at ``rho == 0``; :func:`correlation_step` uses the finite product
    ``rho * g(rho)`` instead.
    """
    if abs(rho) > 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho!r}")
    if rho == 0:
        raise ValueError("g(rho) is singular at rho=0; use the product form rho*g(rho)")
    return (rho * math.asin(rho) + math.sqrt(1.0 - rho * rho)) / (math.pi * rho)


def _rho_g(rho):
    # rho * g(rho), finite at rho = 0
    return (rho * math.asin(rho) + math.sqrt(max(0.0, 1.0 - rho * rho))) / math.pi


def correlation_map(rho, theta):
    """One layer of the correlation recurrence at criticality (``sigma_b^2 = 0``)."""
    return (1.0 - theta) * (_rho_g(rho) + 0.5 * rho)


def correlation_slope(rho, theta):
    """Derivative of :func:`correlation_map` with respect to ``rho``."""
    return (1.0 - theta) / math.pi * (math.asin(rho) + math.pi / 2.0)


def variance_step(params, nu_prev):
    return params.gain * nu_prev + params.sigma_b_sq


def correlation_step(params, state):
    """Advance a :class:`SignalState` through one hidden layer."""
    nu1 = variance_step(params, state.nu1)
    nu2 = variance_step(params, state.nu2)
    scale = math.sqrt(state.nu1 * state.nu2)
    rho = min(1.0, max(-1.0, state.rho))
    kappa = 0.5 * params.sigma_w_sq * scale * (_rho_g(rho) + 0.5 * rho) + params.sigma_b_sq
    return SignalState.from_moments(nu1, nu2, kappa)


def input_layer_step(params, state):
    """Map raw-input moments to first-layer pre-activation moments.

    The network input is not passed through a ReLU, so the first layer lacks the
    halving that the hidden-layer recurrence assumes. Dropout masks are drawn
    independently for the two inputs, so only the variances pick up ``1/(1-theta)``.
    """
    keep = 1.0 - params.theta
    nu1 = params.sigma_w_sq * state.nu1 / keep + params.sigma_b_sq
    nu2 = params.sigma_w_sq * state.nu2 / keep + params.sigma_b_sq
    kappa = params.sigma_w_sq * state.kappa + params.sigma_b_sq
    return SignalState.from_moments(nu1, nu2, kappa)


def propagate(params, initial, layers, raw_input=False):
    """Iterate the moment recurrences for ``layers`` layers.

    Element ``l - 1`` of the returned list is the state after ``l`` layers. With
    ``raw_input=True`` the first layer uses :func:`input_layer_step`, which is the
    exact map when ``initial`` holds moments of un-activated network inputs.

    Raises :class:`SignalOverflowError` if a variance leaves the finite range.
    """
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers!r}")
    trajectory = []
    state = initial
    for layer in range(1, layers + 1):
        step = input_layer_step if (raw_input and layer == 1) else correlation_step
        try:
            state = step(params, state)
        except (ArithmeticError, ValueError) as exc:
            # zero variance after underflow fails SignalState validation
            raise SignalOverflowError(
                f"variance left the representable range at layer {layer}: {exc}", layer, trajectory
            ) from exc
        if not all(math.isfinite(v) for v in (state.nu1, state.nu2, state.kappa)):
            raise SignalOverflowError(f"variance overflowed at layer {layer}", layer, trajectory)
        trajectory.append(state)
    return trajectory


def rho_star(theta, tol=1e-12, max_iter=1_000_000):
    """Fixed point of the correlation map, by plain iteration from 0.5.

    Without dropout the map has slope 1 at its fixed point 1, so that case is
    returned directly instead of iterated.
    """
    _check_theta(theta)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if theta == 0:
        return 1.0
    rho = 0.5
    for _ in range(max_iter):
        nxt = correlation_map(rho, theta)
        if abs(nxt - rho) < tol:
            return nxt
        rho = nxt
    raise ConvergenceError(f"no convergence in {max_iter} iterations (theta={theta})", rho)


def correlation_depth_scale(theta):
    """Depth (in layers) over which input correlations stay informative.

    Uses a fixed multiplier of 6 on the inverse log-slope at the fixed point.
    """
    _check_theta(theta)
    if theta == 0:
        return math.inf
    slope = correlation_slope(rho_star(theta), theta)
    return -6.0 / math.log(slope)


def variance_depth_bound(params, nu0=1.0, limits=FloatLimits()):
    """Depth at which the variance under/overflows the representable range."""
    if not nu0 > 0:
        raise ValueError(f"nu0 must be positive, got {nu0!r}")
    critical = 2.0 * (1.0 - params.theta)
    if params.sigma_w_sq == critical:
        return math.inf
    rate = math.log(params.gain)
    if params.sigma_w_sq < critical:
        return math.log(limits.alpha / nu0) / rate
    return math.log(limits.beta / nu0) / rate


def depth_scales(params, nu0=1.0, limits=FloatLimits()):
    return DepthScales(
        ell_nu=variance_depth_bound(params, nu0, limits),
        ell_rho=correlation_depth_scale(params.theta),
        rho_star=rho_star(params.theta),
    )
