"""Feature weights from per-feature importance and uncertainty."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prob import GaussianParamSet


@dataclass(frozen=True)
class WeightConfig:
    lambda_s: float = 0.01
    lambda_r: float = 0.01

    def __post_init__(self):
        if not self.lambda_s >= 0:
            raise ValueError("lambda_s must be >= 0")
        if not self.lambda_r > 0:
            raise ValueError("lambda_r must be > 0")


@dataclass(frozen=True)
class FeatureWeights:
    omega: np.ndarray
    timestep: int = 0

    def __len__(self) -> int:
        return self.omega.size


def compute_weights(feature_params: GaussianParamSet, cfg: WeightConfig, t: int = 0) -> FeatureWeights:
    """omega_j = (mu_j^2 - lambda_s * sigma_j^2) / (2 * lambda_r), elementwise.

    This is the exact maximiser of the per-feature objective
    omega * (mu^2 - lambda_s * sigma^2 - lambda_r * omega).
    """
    if cfg.lambda_r == 0:
        raise ZeroDivisionError("lambda_r must be nonzero")
    mu = feature_params.mu
    sigma = feature_params.sigma
    omega = (mu * mu - cfg.lambda_s * sigma * sigma) / (2.0 * cfg.lambda_r)
    return FeatureWeights(omega, int(t))


def check_attentive(weights: FeatureWeights, feature_params: GaussianParamSet, cfg: WeightConfig | None = None) -> bool:
    """True iff every feature with zero importance has a nonpositive weight."""
    omega = np.asarray(weights.omega)
    if omega.shape != feature_params.mu.shape:
        return False
    zero = feature_params.mu == 0
    return bool(np.all(omega[zero] <= 0))


def check_monotonic(
    params_i: tuple[float, float],
    params_j: tuple[float, float],
    weights: tuple[float, float],
    cfg: WeightConfig | None = None,
) -> bool:
    """Check both monotonicity biconditionals for one feature pair.

    ``params_i`` and ``params_j`` are ``(mu, sigma)`` pairs, ``weights`` is
    ``(omega_i, omega_j)``. A condition whose premise does not apply
    (unequal |mu|, or unequal sigma) holds vacuously.
    """
    mu_i, s_i = params_i
    mu_j, s_j = params_j
    w_i, w_j = weights
    ok = True
    if abs(mu_i) == abs(mu_j):
        ok &= (s_i >= s_j) == (w_i <= w_j)
        ok &= (s_i < s_j) == (w_i > w_j)
    if s_i == s_j:
        ok &= (abs(mu_i) >= abs(mu_j)) == (w_i >= w_j)
        ok &= (abs(mu_i) < abs(mu_j)) == (w_i < w_j)
    return bool(ok)


def feature_ranking(weights: FeatureWeights) -> np.ndarray:
    """Feature indices by descending weight; ties go to the lower index."""
    omega = np.asarray(weights.omega)
    return np.lexsort((np.arange(omega.size), -omega))
