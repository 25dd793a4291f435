"""Standard-normal primitives and the Gaussian parameter store."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

SIGMA_FLOOR = 1e-6

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_SQRT_2 = 1.0 / math.sqrt(2.0)


def _check_finite(z):
    arr = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("input must be finite")
    return arr


def std_normal_pdf(z):
    """Density of N(0, 1). Accepts scalars or arrays."""
    arr = _check_finite(z)
    out = _INV_SQRT_2PI * np.exp(-0.5 * arr * arr)
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(z):
    """Distribution function of N(0, 1), computed as erfc(-z/sqrt(2)) / 2.

    The erfc form keeps full relative precision in the lower tail, where
    1 + erf(z) would cancel.
    """
    arr = _check_finite(z)
    out = 0.5 * erfc(-arr * _INV_SQRT_2)
    return float(out) if out.ndim == 0 else out


@dataclass
class GaussianParamSet:
    """Independent Gaussians N(mu_k, sigma_k) over K model parameters.

    ``sigma`` holds standard deviations, not variances.
    """

    mu: np.ndarray
    sigma: np.ndarray
    sigma_floor: float = field(default=SIGMA_FLOOR)

    def __post_init__(self):
        self.mu = np.array(self.mu, dtype=np.float64).ravel()
        self.sigma = np.array(self.sigma, dtype=np.float64).ravel()
        if self.sigma_floor <= 0:
            raise ValueError("sigma_floor must be positive")
        if self.mu.size < 1 or self.mu.shape != self.sigma.shape:
            raise ValueError(
                f"mu and sigma must have equal nonzero length, got {self.mu.size} and {self.sigma.size}"
            )
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.sigma))):
            raise ValueError("parameters must be finite")
        self.apply_floor()

    @classmethod
    def standard(cls, size: int, sigma_floor: float = SIGMA_FLOOR) -> "GaussianParamSet":
        """All parameters N(0, 1)."""
        return cls(np.zeros(size), np.ones(size), sigma_floor)

    def __len__(self) -> int:
        return self.mu.size

    def apply_floor(self) -> None:
        np.maximum(self.sigma, self.sigma_floor, out=self.sigma)

    def update(self, delta_mu, delta_sigma) -> None:
        """Add increments in place, then re-apply the sigma floor."""
        delta_mu = np.asarray(delta_mu, dtype=np.float64)
        delta_sigma = np.asarray(delta_sigma, dtype=np.float64)
        if delta_mu.shape != self.mu.shape or delta_sigma.shape != self.sigma.shape:
            raise ValueError("update shape does not match parameter set")
        self.mu += delta_mu
        self.sigma += delta_sigma
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.sigma))):
            raise FloatingPointError("parameter update produced non-finite values")
        self.apply_floor()

    def copy(self) -> "GaussianParamSet":
        return GaussianParamSet(self.mu.copy(), self.sigma.copy(), self.sigma_floor)


def gaussian_cdf_expectation(alpha, beta: float, params: GaussianParamSet) -> float:
    """E[Phi(sum_i alpha_i X_i + beta)] for independent X_i ~ N(mu_i, sigma_i).

    Closed form Phi((beta + alpha.mu) / sqrt(1 + sum alpha_i^2 sigma_i^2)).
    """
    alpha = _check_finite(alpha).ravel()
    if alpha.size != len(params):
        raise ValueError(f"alpha has length {alpha.size}, expected {len(params)}")
    beta = float(_check_finite(beta))
    num = beta + float(alpha @ params.mu)
    den = math.sqrt(1.0 + float(np.sum((alpha * params.sigma) ** 2)))
    return std_normal_cdf(num / den)
