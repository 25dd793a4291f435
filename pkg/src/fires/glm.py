"""Probit GLM base model with a closed-form marginal likelihood.

Each input feature owns exactly one Gaussian weight; there is no bias.
Integrating theta ~ N(mu, sigma) out of Phi(y * theta.x) gives

    P(y | x) = Phi(y * mu.x / rho),   rho = sqrt(1 + sum_j sigma_j^2 x_j^2)
"""

from __future__ import annotations

import numpy as np

from .prob import GaussianParamSet, std_normal_cdf, std_normal_pdf

P_FLOOR = 1e-10


def _check_labels(y):
    y = np.asarray(y, dtype=np.float64)
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ValueError("labels must be -1 or +1")
    return y


def glm_rho(x, sigma) -> np.ndarray | float:
    """sqrt(1 + sum_j sigma_j^2 x_j^2), row-wise for 2-D ``x``."""
    x = np.asarray(x, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    return np.sqrt(1.0 + (x * x) @ (sigma * sigma))


def glm_marginal(x, y, params: GaussianParamSet):
    """P(y | x, psi) for one row (scalar y) or a batch (rows of ``x``)."""
    x = np.asarray(x, dtype=np.float64)
    y = _check_labels(y)
    rho = glm_rho(x, params.sigma)
    return std_normal_cdf(y * (x @ params.mu) / rho)


def glm_gradients(x, y, params: GaussianParamSet):
    """Exact (dP/dmu, dP/dsigma) of :func:`glm_marginal`.

    For a batch, returns arrays of shape (B, J): one gradient per row.
    """
    x = np.asarray(x, dtype=np.float64)
    y = _check_labels(y)
    rho = glm_rho(x, params.sigma)
    lin = x @ params.mu
    dens = std_normal_pdf(y * lin / rho)
    coef = np.asarray(dens * y / rho)[..., None]
    d_mu = coef * x
    # d/dsigma_j of lin/rho = -lin * sigma_j x_j^2 / rho^3
    d_sigma = -np.asarray(dens * y * lin / rho**3)[..., None] * (x * x) * params.sigma
    return d_mu, d_sigma


class GlmModel:
    """Probit GLM with one Gaussian weight per feature (K == J)."""

    name = "glm"

    def __init__(self, n_features: int, sigma_floor: float | None = None):
        kw = {} if sigma_floor is None else {"sigma_floor": sigma_floor}
        self.params = GaussianParamSet.standard(n_features, **kw)
        self.n_features = n_features

    def marginal(self, X, y, rng=None) -> np.ndarray:
        return glm_marginal(X, y, self.params)

    def loglik_gradients(self, X, y, rng=None):
        """Batch mean of grad log P = (1/P) grad P, with P floored."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.atleast_1d(y)
        p = np.maximum(glm_marginal(X, y, self.params), P_FLOOR)
        d_mu, d_sigma = glm_gradients(X, y, self.params)
        w = 1.0 / (p * X.shape[0])
        return w @ d_mu, w @ d_sigma, None

    def apply_extra(self, extra, learning_rate: float) -> None:
        """No point-estimate parameters to update."""

    def feature_params(self) -> GaussianParamSet:
        return self.params
