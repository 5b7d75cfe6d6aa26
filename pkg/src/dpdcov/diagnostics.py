"""Analytic robustness and efficiency diagnostics under the normal model.

Provides the influence functions of the componentwise functionals (mean,
variance, correlation), the asymptotic variances of both the sequential and
the simultaneous estimators as 3x3 sandwich matrices over
``(sigma1^2, sigma2^2, rho)``, and asymptotic relative efficiency (ARE)
tables on ``beta`` x ``rho`` grids.

Sign convention: the mean influence function carries a leading minus sign,
so its ``beta = 0`` limit is ``-(y - mu)`` (the negative of the usual ML
score-based form). Magnitudes and boundedness are unaffected; consumers that
need the score-based orientation should flip the sign.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ValidationError
from .normal_model import PairParams
from .validation import check_beta

TWO_PI = 2.0 * np.pi

#: Condition number beyond which the sandwich solve is refused.
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class AsymptoticVarianceReport:
    """Sandwich matrices and extracted asymptotic variances of one method.

    ``bread`` and ``meat`` are 3x3 matrices over ``(sigma1^2, sigma2^2, rho)``;
    the variances are the diagonal of ``bread^-1 meat bread^-T`` scaled for
    ``sqrt(n)``-normalised estimators. ``var_mean`` is the asymptotic variance
    of the first component's location estimator.
    """

    method: str
    var_mean: float
    var_sigma2_1: float
    var_sigma2_2: float
    var_rho: float
    bread: np.ndarray
    meat: np.ndarray
    condition_number: float


def if_mean(y, m, beta):
    """Influence function of a component mean at contamination point ``y``.

    Equals ``-(1+beta)^(3/2) (y - mu) exp(-beta (y-mu)^2 / (2 sigma^2))``;
    redescending (bounded with interior extrema) for ``beta > 0`` and
    ``-(y - mu)`` in the maximum-likelihood limit.
    """
    beta = check_beta(beta)
    y = np.asarray(y, dtype=float)
    r = y - m.mu
    return -((1.0 + beta) ** 1.5) * r * np.exp(-beta * r**2 / (2.0 * m.sigma2))


def if_variance(y, m, beta):
    """Influence function of a component variance at contamination point ``y``.

    Bounded for ``beta > 0``; reduces to ``(y - mu)^2 - sigma^2`` in the
    maximum-likelihood limit.
    """
    beta = check_beta(beta)
    y = np.asarray(y, dtype=float)
    r2 = (y - m.mu) ** 2
    # common factor (2 pi sigma^2)^(-beta/2) cancelled between numerator terms
    # and the curvature normaliser
    num = np.exp(-beta * r2 / (2.0 * m.sigma2)) * (r2 - m.sigma2) \
        + beta * m.sigma2 * (1.0 + beta) ** -1.5
    return num * 2.0 * (1.0 + beta) ** 2.5 / (beta**2 + 2.0)


def _u_rho(z1, z2, rho):
    r2 = 1.0 - rho**2
    return rho / r2 - (rho * (z1**2 + z2**2) - (1.0 + rho**2) * z1 * z2) / r2**2


def if_correlation(y1, y2, model, beta):
    """Influence function of a pairwise correlation at ``(y1, y2)``.

    Assembled from the closed-form score integrals of the bivariate normal;
    linear in the marginal variance influence functions of both components.
    Bounded and redescending for ``beta > 0``, unbounded in the
    maximum-likelihood limit.
    """
    beta = check_beta(beta)
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    rho = model.rho
    r2 = 1.0 - rho**2
    z1 = (y1 - model.a.mu) / np.sqrt(model.a.sigma2)
    z2 = (y2 - model.b.mu) / np.sqrt(model.b.sigma2)
    quad = (z1**2 - 2.0 * rho * z1 * z2 + z2**2) / r2

    # all terms share the factor (2 pi)^-beta (s1^2 s2^2)^(-beta/2) (1-rho^2)^(-beta/2)
    point = np.exp(-beta * quad / 2.0) * _u_rho(z1, z2, rho)
    score_mass = rho * beta / (r2 * (1.0 + beta) ** 2)
    var_coupling = -rho * (1.0 + beta**2) / (2.0 * r2 * (1.0 + beta) ** 3) * (
        if_variance(y1, model.a, beta) / model.a.sigma2
        + if_variance(y2, model.b, beta) / model.b.sigma2
    )
    curvature = (
        rho**2
        + (1.0 - 3.0 * rho**4 + 2.0 * rho**6) / (r2**2 * (1.0 + beta) ** 2)
        - 2.0 * rho**2 / (1.0 + beta)
    ) / (r2**2 * (1.0 + beta))
    return (point - score_mass - var_coupling) / curvature


@dataclass(frozen=True)
class InfluenceGrid:
    """Influence values over a contamination grid, ready for CSV export."""

    target: str
    beta: float
    model: PairParams
    points: np.ndarray
    values: np.ndarray


def influence_grid(target, beta, model, grid1, grid2=None):
    """Evaluate one influence surface over a grid of contamination points.

    ``target`` is ``"mean"`` or ``"variance"`` (1-D grid over the first
    component) or ``"correlation"`` (outer 2-D grid over both components).
    """
    grid1 = np.asarray(grid1, dtype=float)
    if grid1.size == 0:
        raise ValidationError("contamination grid is empty")
    if target == "mean":
        return InfluenceGrid(target, beta, model, grid1[:, None],
                             if_mean(grid1, model.a, beta))
    if target == "variance":
        return InfluenceGrid(target, beta, model, grid1[:, None],
                             if_variance(grid1, model.a, beta))
    if target == "correlation":
        grid2 = grid1 if grid2 is None else np.asarray(grid2, dtype=float)
        if grid2.size == 0:
            raise ValidationError("contamination grid is empty")
        Y1, Y2 = np.meshgrid(grid1, grid2, indexing="ij")
        vals = if_correlation(Y1, Y2, model, beta)
        pts = np.column_stack([Y1.ravel(), Y2.ravel()])
        return InfluenceGrid(target, beta, model, pts, vals.ravel())
    raise ValidationError(f"unknown influence target {target!r}")


def smdpde_mean_avar(beta, sigma2):
    """Asymptotic variance of a sqrt(n)-normalised sequential mean estimate."""
    beta = check_beta(beta)
    return (1.0 + beta**2 / (1.0 + 2.0 * beta)) ** 1.5 * sigma2


def mdpde_mean_avar(beta, sigma2):
    """Asymptotic variance of a sqrt(n)-normalised simultaneous mean estimate."""
    beta = check_beta(beta)
    return (1.0 + beta**2 / (1.0 + 2.0 * beta)) ** 2 * sigma2


def _sandwich(bread, meat, method):
    cond = float(np.linalg.cond(bread))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise NumericError(
            f"{method} bread matrix is numerically singular (condition number {cond:.3e})")
    half = np.linalg.solve(bread, meat)
    return np.linalg.solve(bread, half.T).T, cond


def smdpde_block_avar(beta, sigma1, sigma2, rho):
    """Asymptotic variance block of the sequential estimator.

    Parameters are the true standard deviations ``sigma1, sigma2`` and the
    true correlation ``rho``. The bread matrix is lower triangular because
    the marginal fits never see ``rho``; its last row couples the correlation
    step to the plugged-in variances.
    """
    b = check_beta(beta)
    if not (sigma1 > 0 and sigma2 > 0):
        raise ValidationError("standard deviations must be positive")
    if abs(rho) >= 1.0:
        raise ValidationError(f"|rho| must be below 1, got {rho}")
    s1, s2, r = float(sigma1), float(sigma2), float(rho)
    r2 = 1.0 - r**2

    d22 = (b**2 + 2.0) / (4.0 * TWO_PI ** (b / 2) * (1 + b) ** 1.5 * s1 ** (b + 4))
    d44 = (b**2 + 2.0) / (4.0 * TWO_PI ** (b / 2) * (1 + b) ** 1.5 * s2 ** (b + 4))
    e_num = r * (1 + b**2) + r * b * (
        1 - b - (2 * r**4 - 4 * r**2 + 2) / ((1 + b) * r2**2))
    e1 = -e_num / (2 * s1**2 * (s1 * s2) ** b * TWO_PI**b * r2 ** (1 + b / 2) * (1 + b))
    e2 = -e_num / (2 * s2**2 * (s1 * s2) ** b * TWO_PI**b * r2 ** (1 + b / 2) * (1 + b))
    curv = 1 + r**2 * (1 + b) - b * (2 * r**6 - 3 * r**4 + 1) / ((1 + b) * r2**2)
    a = curv / ((s1 * s2) ** b * TWO_PI**b * r2 ** (2 + b / 2) * (1 + b))
    bread = np.array([[d22, 0.0, 0.0], [0.0, d44, 0.0], [e1, e2, a]])

    g22 = (0.5 + 1.5 / (1 + 2 * b) ** 2 - 1 / (1 + 2 * b)) / np.sqrt(1 + 2 * b) \
        - b**2 / (2 * (1 + b) ** 3)
    G22 = (1 + b) ** 2 * g22 / (2 * TWO_PI**b * s1 ** (2 * b + 4))
    G44 = (1 + b) ** 2 * g22 / (2 * TWO_PI**b * s2 ** (2 * b + 4))
    disc = (b + 1) ** 2 - (b * r) ** 2
    g24 = ((1 - (1 + b * r2) / disc) ** 2 + 2 * r**2 / disc**2) / np.sqrt(disc) \
        - b**2 / (1 + b) ** 3
    G24 = (1 + b) ** 2 * g24 / (4 * TWO_PI**b * (s1 * s2) ** (b + 2))
    tail = 1 - 2 * (1 + b) ** 2 / (1 + 2 * b) ** 1.5
    G25 = b**2 * r * tail / (
        2 * TWO_PI ** (1.5 * b) * s1 ** (2 * b + 2) * s2**b * r2 ** (1 + b / 2)
        * (1 + b) ** 1.5)
    G45 = b**2 * r * tail / (
        2 * TWO_PI ** (1.5 * b) * s2 ** (2 * b + 2) * s1**b * r2 ** (1 + b / 2)
        * (1 + b) ** 1.5)
    g55 = r**2 / (1 + 2 * b) + (1 - 3 * r**4 + 2 * r**6) / (r2**2 * (1 + 2 * b) ** 3) \
        - 2 * r**2 / (1 + 2 * b) ** 2 - b**2 * r**2 / (1 + b) ** 4
    G55 = (1 + b) ** 2 * g55 / (TWO_PI ** (2 * b) * (s1 * s2) ** (2 * b) * r2 ** (b + 2))
    meat = np.array([[G22, G24, G25], [G24, G44, G45], [G25, G45, G55]])

    sandwich, cond = _sandwich(bread, meat, "smdpde")
    return AsymptoticVarianceReport(
        method="smdpde", var_mean=smdpde_mean_avar(b, s1**2),
        var_sigma2_1=float(sandwich[0, 0]), var_sigma2_2=float(sandwich[1, 1]),
        var_rho=float(sandwich[2, 2]), bread=bread, meat=meat,
        condition_number=cond,
    )


def mdpde_block_avar(beta, sigma1, sigma2, rho):
    """Asymptotic variance block of the simultaneous estimator.

    The ``(rho, rho)`` meat entry equals the variance of the pairwise
    correlation score and therefore coincides with the sequential meat's
    corresponding entry, carrying its ``(1 + beta)^2`` factor.
    """
    b = check_beta(beta)
    if not (sigma1 > 0 and sigma2 > 0):
        raise ValidationError("standard deviations must be positive")
    if abs(rho) >= 1.0:
        raise ValidationError(f"|rho| must be below 1, got {rho}")
    s1, s2, r = float(sigma1), float(sigma2), float(rho)
    r2 = 1.0 - r**2

    j22 = (b**2 + (2 - r**2) / r2) / (
        4 * s1**4 * TWO_PI**b * (s1 * s2) ** b * r2 ** (b / 2) * (1 + b) ** 2)
    j44 = (b**2 + (2 - r**2) / r2) / (
        4 * s2**4 * TWO_PI**b * (s1 * s2) ** b * r2 ** (b / 2) * (1 + b) ** 2)
    j55 = (r**2 * (1 + b) + (2 * r**6 - 3 * r**4 + 1) / ((1 + b) * r2**2) - 2 * r**2) / (
        (s1 * s2) ** b * TWO_PI**b * r2 ** (2 + b / 2) * (1 + b))
    j24 = (1 - 2 / (1 + b) + (1 - 2 * r**2) / (r2 * (1 + b) ** 2)) / (
        4 * (s1 * s2) ** (b + 2) * TWO_PI**b * r2 ** (b / 2))
    j25 = r * (1 - b - 2 / (1 + b)) / (
        2 * s1**2 * (s1 * s2) ** b * TWO_PI**b * r2 ** (1 + b / 2) * (1 + b))
    j45 = r * (1 - b - 2 / (1 + b)) / (
        2 * s2**2 * (s1 * s2) ** b * TWO_PI**b * r2 ** (1 + b / 2) * (1 + b))
    bread = np.array([[j22, j24, j25], [j24, j44, j45], [j25, j45, j55]])

    k_diag = (1 + b) ** 2 / (1 + 2 * b) ** 3 * (4 * b**2 + (2 - r**2) / r2) \
        - (b / (1 + b)) ** 2
    k22 = k_diag / (4 * s1**4 * TWO_PI ** (2 * b) * (s1 * s2) ** (2 * b) * r2**b)
    k44 = k_diag / (4 * s2**4 * TWO_PI ** (2 * b) * (s1 * s2) ** (2 * b) * r2**b)
    g55 = r**2 / (1 + 2 * b) + (1 - 3 * r**4 + 2 * r**6) / (r2**2 * (1 + 2 * b) ** 3) \
        - 2 * r**2 / (1 + 2 * b) ** 2 - b**2 * r**2 / (1 + b) ** 4
    # variance of the rho-score: identical to the sequential meat entry
    k55 = (1 + b) ** 2 * g55 / (TWO_PI ** (2 * b) * (s1 * s2) ** (2 * b) * r2 ** (2 + b))
    # the sigma1^2-score/sigma2^2-score covariance scales with both variances
    # (swap symmetry), verified against the quadrature oracle at unequal scales
    k24 = ((1 + b) ** 2 / (1 + 2 * b) ** 3 * (4 * b**2 - r**2 / r2)
           - (b / (1 + b)) ** 2) / (
        4 * s1**2 * s2**2 * TWO_PI ** (2 * b) * (s1 * s2) ** (2 * b) * r2**b)
    k_off = (1 + b) ** 2 / (1 + 2 * b) ** 2 * (1 - 2 * b - 2 / (1 + 2 * b)) \
        + (b / (1 + b)) ** 2
    k25 = r * k_off / (2 * s1**2 * TWO_PI ** (2 * b) * (s1 * s2) ** (2 * b) * r2 ** (1 + b))
    k45 = r * k_off / (2 * s2**2 * TWO_PI ** (2 * b) * (s1 * s2) ** (2 * b) * r2 ** (1 + b))
    meat = np.array([[k22, k24, k25], [k24, k44, k45], [k25, k45, k55]])

    sandwich, cond = _sandwich(bread, meat, "mdpde")
    return AsymptoticVarianceReport(
        method="mdpde", var_mean=mdpde_mean_avar(b, s1**2),
        var_sigma2_1=float(sandwich[0, 0]), var_sigma2_2=float(sandwich[1, 1]),
        var_rho=float(sandwich[2, 2]), bread=bread, meat=meat,
        condition_number=cond,
    )


def mean_are(beta, method):
    """Mean-estimator ARE (percent) relative to maximum likelihood."""
    base = 1.0 + beta**2 / (1.0 + 2.0 * beta)
    power = 1.5 if method == "smdpde" else 2.0
    return 100.0 * base ** (-power)


def variance_are(beta, method):
    """Variance-estimator ARE (percent) at unit scales, uncorrelated pair."""
    report = (smdpde_block_avar if method == "smdpde" else mdpde_block_avar)(
        beta, 1.0, 1.0, 0.0)
    return 100.0 * 2.0 / report.var_sigma2_1


def correlation_are(beta, rho, method):
    """Correlation-estimator ARE (percent) at unit scales and correlation ``rho``."""
    report = (smdpde_block_avar if method == "smdpde" else mdpde_block_avar)(
        beta, 1.0, 1.0, rho)
    return 100.0 * (1.0 - rho**2) ** 2 / report.var_rho


def are_tables(betas, rhos):
    """ARE tables over the given grids.

    Returns ``(mean_variance_rows, correlation_rows)``: the first lists
    ``(estimand, method, beta, are)`` for the mean and variance estimators,
    the second ``(rho, beta, are_smdpde, are_mdpde)`` for the correlation
    estimators.
    """
    betas = [check_beta(b) for b in betas]
    for r in rhos:
        if abs(r) >= 1.0:
            raise ValidationError(f"|rho| must be below 1, got {r}")
    table1 = []
    for estimand, fn in (("mean", mean_are), ("variance", variance_are)):
        for method in ("smdpde", "mdpde"):
            for b in betas:
                table1.append({"estimand": estimand, "method": method,
                               "beta": b, "are": fn(b, method)})
    table2 = []
    for r in rhos:
        for b in betas:
            table2.append({
                "rho": r, "beta": b,
                "are_smdpde": correlation_are(b, r, "smdpde"),
                "are_mdpde": correlation_are(b, r, "mdpde"),
            })
    return table1, table2
