"""Closed-form normal-model quantities for density power divergence estimation.

The density power divergence (DPD) between an empirical sample and a model
density ``f`` reduces, up to terms free of the parameters, to the objective

    H(theta) = integral f^(1+beta) dx - (1 + 1/beta) * mean_i f^beta(x_i),

see Basu et al. (1998), "Robust and efficient estimation by minimising a
density power divergence", Biometrika 85. This module provides the exact
power integrals, the marginal (univariate) and pairwise (bivariate) normal
objectives, and their analytic gradients. All density powers are evaluated
in log space so that ``f^beta`` does not underflow for distant outliers.

``beta = 0`` is the maximum-likelihood limit; objectives then evaluate the
mean negative log-density, which has the same minimisers.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .validation import check_beta, check_vector

LOG_TWO_PI = float(np.log(2.0 * np.pi))

#: Correlations are kept inside [-1 + RHO_GUARD, 1 - RHO_GUARD]; the bivariate
#: objective degenerates as (1 - rho^2) -> 0.
RHO_GUARD = 1e-6


@dataclass(frozen=True)
class MarginalParams:
    """Location and variance of one data component."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise ValidationError(f"mu must be finite, got {self.mu}")
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0.0:
            raise ValidationError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class PairParams:
    """Marginal parameters of two components plus their correlation."""

    a: MarginalParams
    b: MarginalParams
    rho: float

    def __post_init__(self):
        if not np.isfinite(self.rho) or abs(self.rho) >= 1.0:
            raise ValidationError(f"rho must lie strictly inside (-1, 1), got {self.rho}")


def _check_rho_guard(rho):
    if abs(rho) > 1.0 - RHO_GUARD:
        raise ValidationError(
            f"|rho| may not exceed {1.0 - RHO_GUARD} (guard against a singular pair density), "
            f"got {rho}"
        )


def univariate_power_integral(params, beta):
    """Integral of the univariate normal density raised to the power ``1 + beta``.

    Equals ``(2 pi sigma^2)^(-beta/2) * (1 + beta)^(-1/2)``; it does not
    depend on the location ``mu``. At ``beta = 0`` the value is exactly 1.
    """
    beta = check_beta(beta)
    return (2.0 * np.pi * params.sigma2) ** (-beta / 2.0) / np.sqrt(1.0 + beta)


def bivariate_power_integral(pair, beta):
    """Integral of the bivariate normal density raised to the power ``1 + beta``.

    Equals ``(2 pi)^(-beta) * (s1^2 s2^2 (1 - rho^2))^(-beta/2) / (1 + beta)``.
    """
    beta = check_beta(beta)
    _check_rho_guard(pair.rho)
    det = pair.a.sigma2 * pair.b.sigma2 * (1.0 - pair.rho**2)
    return (2.0 * np.pi) ** (-beta) * det ** (-beta / 2.0) / (1.0 + beta)


def marginal_log_density(x, params):
    """Log-density of N(mu, sigma2) evaluated elementwise."""
    return -0.5 * (LOG_TWO_PI + np.log(params.sigma2)) \
        - (x - params.mu) ** 2 / (2.0 * params.sigma2)


def pairwise_log_density(x1, x2, pair):
    """Log-density of the bivariate normal with the given pair parameters."""
    z1 = (x1 - pair.a.mu) / np.sqrt(pair.a.sigma2)
    z2 = (x2 - pair.b.mu) / np.sqrt(pair.b.sigma2)
    r2 = 1.0 - pair.rho**2
    quad = (z1**2 - 2.0 * pair.rho * z1 * z2 + z2**2) / r2
    return -LOG_TWO_PI - 0.5 * np.log(pair.a.sigma2 * pair.b.sigma2 * r2) - quad / 2.0


def marginal_objective(x, params, beta):
    """DPD objective of one component: ``integral f^(1+beta) - (1+1/beta) mean f^beta``.

    For ``beta = 0`` returns the mean negative log-density, which shares its
    minimiser with the Kullback-Leibler limit of the divergence.
    """
    beta = check_beta(beta)
    x = check_vector(x)
    logf = marginal_log_density(x, params)
    if beta == 0.0:
        return float(-np.mean(logf))
    return univariate_power_integral(params, beta) \
        - (1.0 + 1.0 / beta) * float(np.mean(np.exp(beta * logf)))


def marginal_objective_gradient(x, params, beta):
    """Gradient of :func:`marginal_objective` with respect to ``(mu, sigma2)``."""
    beta = check_beta(beta)
    x = check_vector(x)
    mu, s2 = params.mu, params.sigma2
    fb = np.exp(beta * marginal_log_density(x, params))
    u_mu = (x - mu) / s2
    u_s2 = ((x - mu) ** 2 / s2 - 1.0) / (2.0 * s2)
    d_int_s2 = -(beta / 2.0) * univariate_power_integral(params, beta) / s2
    g_mu = -(1.0 + beta) * float(np.mean(fb * u_mu))
    g_s2 = d_int_s2 - (1.0 + beta) * float(np.mean(fb * u_s2))
    return np.array([g_mu, g_s2])


def _check_pair_sample(x1, x2):
    x1 = check_vector(x1, name="xj")
    x2 = check_vector(x2, name="xk")
    if x1.size != x2.size:
        raise ValidationError(f"column lengths differ: {x1.size} vs {x2.size}")
    return x1, x2


def pairwise_objective(x1, x2, pair, beta):
    """DPD objective of a component pair as a function of the pair parameters.

    Smooth in ``rho`` on the guarded interval; ``beta = 0`` evaluates the
    joint mean negative log-likelihood.
    """
    beta = check_beta(beta)
    _check_rho_guard(pair.rho)
    x1, x2 = _check_pair_sample(x1, x2)
    logf = pairwise_log_density(x1, x2, pair)
    if beta == 0.0:
        return float(-np.mean(logf))
    return bivariate_power_integral(pair, beta) \
        - (1.0 + 1.0 / beta) * float(np.mean(np.exp(beta * logf)))


def pairwise_objective_gradient(x1, x2, pair, beta):
    """Gradient of :func:`pairwise_objective` in ``(mu1, sigma2_1, mu2, sigma2_2, rho)``."""
    beta = check_beta(beta)
    _check_rho_guard(pair.rho)
    x1, x2 = _check_pair_sample(x1, x2)
    rho = pair.rho
    s21, s22 = pair.a.sigma2, pair.b.sigma2
    sd1, sd2 = np.sqrt(s21), np.sqrt(s22)
    z1 = (x1 - pair.a.mu) / sd1
    z2 = (x2 - pair.b.mu) / sd2
    r2 = 1.0 - rho**2

    fb = np.exp(beta * pairwise_log_density(x1, x2, pair))
    u_mu1 = (z1 - rho * z2) / (sd1 * r2)
    u_mu2 = (z2 - rho * z1) / (sd2 * r2)
    u_s21 = ((z1**2 - rho * z1 * z2) / r2 - 1.0) / (2.0 * s21)
    u_s22 = ((z2**2 - rho * z1 * z2) / r2 - 1.0) / (2.0 * s22)
    u_rho = rho / r2 - (rho * (z1**2 + z2**2) - (1.0 + rho**2) * z1 * z2) / r2**2

    integral = bivariate_power_integral(pair, beta)
    d_int = np.array([
        0.0,
        -(beta / 2.0) * integral / s21,
        0.0,
        -(beta / 2.0) * integral / s22,
        beta * rho * integral / r2,
    ])
    scores = np.stack([u_mu1, u_s21, u_mu2, u_s22, u_rho])
    return d_int - (1.0 + beta) * np.mean(fb * scores, axis=1)
