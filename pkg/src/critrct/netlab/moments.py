"""Monte Carlo estimates of per-layer pre-activation moments.

Each draw samples fresh weights and fresh dropout masks, runs a train-mode
forward pass on two inputs, and records the average over units of ``h1^2``,
``h2^2`` and ``h1*h2`` at every hidden layer. Averages over draws estimate the
mean-field moments; standard errors come from the spread across draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import meanfield
from .network import NetworkSpec, activate, forward, init_network


@dataclass
class MomentEstimate:
    """Per-layer moment estimates; index ``l - 1`` is hidden layer ``l``."""

    nu1: np.ndarray
    nu2: np.ndarray
    kappa: np.ndarray
    rho: np.ndarray
    nu1_se: np.ndarray
    nu2_se: np.ndarray
    kappa_se: np.ndarray
    rho_se: np.ndarray
    draws: int

    def states(self):
        return [
            meanfield.SignalState.from_moments(float(a), float(b), float(k))
            for a, b, k in zip(self.nu1, self.nu2, self.kappa)
        ]


def estimate_moments(spec, x1, x2, draws, rng, preactivation_input=False, method="forward"):
    """Estimate moments of the hidden-layer pre-activations over ``draws`` networks.

    With ``preactivation_input=True`` the inputs are treated as layer-0
    pre-activations and passed through the activation before the first layer,
    so the plain hidden-layer recurrence applies from layer 1 onwards.

    ``method="forward"`` samples full weight matrices and runs :func:`forward`.
    ``method="projection"`` samples each layer's pair ``(W u1, W u2)`` directly:
    for i.i.d. Gaussian rows of ``W`` these are i.i.d. across units with
    covariance ``sigma_w^2 / fan_in * [[u1.u1, u1.u2], [u1.u2, u2.u2]]``, which
    is the same distribution at ``O(width)`` instead of ``O(width^2)`` cost.
    """
    if method not in ("forward", "projection"):
        raise ValueError(f"method must be 'forward' or 'projection', got {method!r}")
    if draws < 2:
        raise ValueError(f"draws must be >= 2, got {draws!r}")
    x1 = np.asarray(x1, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    if x1.shape != x2.shape:
        raise ValueError(f"inputs differ in dimension: {x1.shape} vs {x2.shape}")
    if x1.size != spec.input_dim:
        raise ValueError(f"inputs have dimension {x1.size}, spec expects {spec.input_dim}")
    batch = np.stack([x1, x2])
    if preactivation_input:
        batch = activate(spec.activation, batch)

    per_draw = np.empty((draws, 3, spec.depth))
    for k in range(draws):
        if method == "forward":
            state = init_network(spec, rng)
            pre = forward(state, spec, batch, mode="train", rng=rng).pre
        else:
            pre = _projected_preactivations(spec, batch, rng)
        for l in range(spec.depth):
            h1, h2 = pre[l]
            per_draw[k, 0, l] = h1 @ h1 / h1.size
            per_draw[k, 1, l] = h2 @ h2 / h2.size
            per_draw[k, 2, l] = h1 @ h2 / h1.size

    mean = per_draw.mean(axis=0)
    se = per_draw.std(axis=0, ddof=1) / np.sqrt(draws)
    nu1, nu2, kappa = mean
    rho = kappa / np.sqrt(nu1 * nu2)
    # standard error of rho from the spread of per-draw ratios
    rho_draws = per_draw[:, 2] / np.sqrt(per_draw[:, 0] * per_draw[:, 1])
    rho_se = rho_draws.std(axis=0, ddof=1) / np.sqrt(draws)
    return MomentEstimate(nu1, nu2, kappa, rho, se[0], se[1], se[2], rho_se, draws)


def _projected_preactivations(spec, batch, rng):
    keep = 1.0 - spec.theta
    sigma_b = np.sqrt(spec.init.sigma_b_sq)
    x = batch
    pre = []
    for fan_in in spec.layer_dims[:-2]:
        if spec.theta > 0:
            x = x * (rng.random(x.shape) < keep) / keep
        cov = spec.init.sigma_w_sq / fan_in * (x @ x.T)
        vals, vecs = np.linalg.eigh(cov)
        root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
        h = root @ rng.standard_normal((2, spec.hidden_width))
        if sigma_b > 0:
            h = h + sigma_b * rng.standard_normal(spec.hidden_width)
        pre.append(h)
        x = activate(spec.activation, h)
    return pre


def theory_trajectory(spec, x1, x2, preactivation_input=False):
    """Mean-field prediction matching :func:`estimate_moments` for the same inputs.

    The first layer uses the exact map from the moments of the vectors that
    actually enter it (after the activation when ``preactivation_input``), so
    no Gaussian assumption is made about the fixed inputs themselves.
    """
    x1 = np.asarray(x1, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    if preactivation_input:
        x1, x2 = activate(spec.activation, x1), activate(spec.activation, x2)
    params = meanfield.HyperParams(spec.init.sigma_w_sq, spec.init.sigma_b_sq, spec.theta)
    initial = meanfield.SignalState.from_inputs(x1, x2)
    return meanfield.propagate(params, initial, spec.depth, raw_input=True)


def make_input_pair(dim, rho, rng, nu0=1.0):
    """Two vectors with exact squared norm ``nu0 * dim`` and cosine similarity ``rho``."""
    a, b = rng.standard_normal((2, dim))
    a /= np.linalg.norm(a)
    b -= (b @ a) * a
    b /= np.linalg.norm(b)
    scale = np.sqrt(nu0 * dim)
    x1 = scale * a
    x2 = scale * (rho * a + np.sqrt(max(0.0, 1.0 - rho * rho)) * b)
    return x1, x2


def moment_spec(width, depth, theta, sigma_w_sq=None, sigma_b_sq=0.0, input_dim=None):
    """Convenience spec for moment studies; critical initialisation by default."""
    init = meanfield.critical_init(theta) if sigma_w_sq is None else meanfield.HyperParams(
        sigma_w_sq, sigma_b_sq, theta)
    return NetworkSpec(
        input_dim=input_dim or width,
        hidden_width=width,
        depth=depth,
        output_dim=1,
        theta=theta,
        init=init,
    )
