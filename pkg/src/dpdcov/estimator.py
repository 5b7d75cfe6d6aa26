"""Sequential location/scatter estimation over a full data matrix.

Step 1 fits every marginal on its own; Step 2 fits every pairwise correlation
with the marginal estimates plugged in; the covariance matrix is assembled as
``Sigma[j, k] = sd_j * sd_k * R[j, k]``. Both steps decompose into independent
tasks (one per column, one per pair) and can run on a thread pool with
results identical to the serial order.

Componentwise assembly does not guarantee a positive definite correlation
matrix in finite samples; :func:`nearest_pd` repairs an indefinite ``R`` by
Higham (2002) alternating projections followed by an eigenvalue floor.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import pinvh
from sklearn.base import BaseEstimator

from .correlation import fit_correlation
from .exceptions import NumericError, ValidationError
from .marginal import SolverConfig, fit_marginal
from .validation import (
    check_beta,
    check_data_matrix,
    check_no_constant_columns,
    check_symmetric_unit_diagonal,
)

_PD_POLICIES = ("auto", "always", "never")


@dataclass
class LocationScatterEstimate:
    """Assembled location vector, correlation and covariance matrices."""

    mu_hat: np.ndarray
    sigma2_hat: np.ndarray
    R_hat: np.ndarray
    Sigma_hat: np.ndarray
    pd_corrected: bool
    per_component: list = field(default_factory=list)
    per_pair: list = field(default_factory=list)

    @property
    def p(self):
        return self.mu_hat.size

    @property
    def n_parameters(self):
        """Number of free parameters: p means, p variances, p(p-1)/2 correlations."""
        return (self.p**2 + 3 * self.p) // 2

    @property
    def converged(self):
        return all(m.converged for m in self.per_component) and \
            all(c.converged for c in self.per_pair)

    def pair(self, j, k):
        """Correlation fit of columns ``j < k``."""
        if not 0 <= j < k < self.p:
            raise ValidationError(f"need 0 <= j < k < {self.p}, got ({j}, {k})")
        return self.per_pair[_pair_index(j, k, self.p)]


def _pair_index(j, k, p):
    # lexicographic position of (j, k), j < k
    return j * p - j * (j + 1) // 2 + (k - j - 1)


def _pair_order(p):
    return [(j, k) for j in range(p) for k in range(j + 1, p)]


def _run_tasks(tasks, threads):
    if threads is None or threads <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(t) for t in tasks]
        return [f.result() for f in futures]


def nearest_pd(R, eigen_floor=1e-8, max_sweeps=100):
    """Nearest positive definite correlation matrix to a symmetric unit-diagonal ``R``.

    Runs Higham (2002) alternating projections between the positive
    semidefinite cone and the unit-diagonal affine set with Dykstra's
    correction until the Frobenius change falls below 1e-10 (or
    ``max_sweeps``), then floors the eigenvalues at ``eigen_floor`` and
    renormalises the diagonal. Inputs whose smallest eigenvalue already
    reaches ``eigen_floor`` are returned unchanged.

    Returns a symmetric matrix with unit diagonal and smallest eigenvalue at
    least ``eigen_floor * (1 - 1e-6)``.
    """
    R = check_symmetric_unit_diagonal(np.array(R, dtype=float, copy=True))
    if np.linalg.eigvalsh(R).min() >= eigen_floor:
        return R

    Y = R.copy()
    correction = np.zeros_like(Y)
    for _ in range(max_sweeps):
        shifted = Y - correction
        w, V = np.linalg.eigh((shifted + shifted.T) / 2.0)
        X = (V * np.clip(w, 0.0, None)) @ V.T
        X = (X + X.T) / 2.0
        correction = X - shifted
        Y_prev = Y
        Y = X.copy()
        np.fill_diagonal(Y, 1.0)
        if np.linalg.norm(Y - Y_prev, "fro") <= 1e-10:
            break

    threshold = eigen_floor * (1.0 - 1e-6)
    for _ in range(100):
        w, V = np.linalg.eigh(Y)
        if w.min() >= threshold:
            return Y
        A = (V * np.maximum(w, eigen_floor)) @ V.T
        A = (A + A.T) / 2.0
        d = np.sqrt(np.diag(A))
        Y = A / np.outer(d, d)
        np.fill_diagonal(Y, 1.0)
    raise NumericError("eigenvalue flooring did not stabilise the correlation matrix")


def estimate_location_scatter(X, beta, cfg=None, pd_policy="auto",
                              eigen_floor=1e-8, threads=None):
    """Run the full sequential pipeline on an (n, p) data matrix.

    Parameters
    ----------
    X : array-like, shape (n, p)
        Data matrix with finite entries, ``n >= 2``, no constant column.
    beta : float
        Robustness tuning parameter in ``[0, 1]``.
    cfg : SolverConfig, optional
        Settings of the marginal IRLS solver (its ``tol`` is also used for
        the correlation search).
    pd_policy : {"auto", "always", "never"}
        Whether to repair the assembled correlation matrix: ``"auto"`` only
        when its smallest eigenvalue falls below ``eigen_floor``.
    eigen_floor : float
        Eigenvalue floor of the repair step.
    threads : int, optional
        Worker count for the per-column and per-pair task pools; ``None`` or
        1 runs serially. Results do not depend on the schedule.

    Returns
    -------
    LocationScatterEstimate
    """
    beta = check_beta(beta)
    cfg = cfg or SolverConfig()
    if pd_policy not in _PD_POLICIES:
        raise ValidationError(f"pd_policy must be one of {_PD_POLICIES}, got {pd_policy!r}")
    X = check_data_matrix(X)
    check_no_constant_columns(X)
    n, p = X.shape
    columns = [np.ascontiguousarray(X[:, j]) for j in range(p)]

    marginals = _run_tasks(
        [lambda c=col: fit_marginal(c, beta, cfg) for col in columns], threads)
    mu_hat = np.array([m.params.mu for m in marginals])
    sigma2_hat = np.array([m.params.sigma2 for m in marginals])

    pairs = _pair_order(p)
    pair_fits = _run_tasks(
        [lambda j=j, k=k: fit_correlation(
            columns[j], columns[k], marginals[j].params, marginals[k].params,
            beta, tol=cfg.tol) for j, k in pairs],
        threads)

    R_raw = np.eye(p)
    for (j, k), fit in zip(pairs, pair_fits):
        R_raw[j, k] = R_raw[k, j] = fit.rho

    R_hat = R_raw
    pd_corrected = False
    if pd_policy == "always" or (
            pd_policy == "auto" and p > 1
            and np.linalg.eigvalsh(R_raw).min() < eigen_floor):
        R_hat = nearest_pd(R_raw, eigen_floor=eigen_floor)
        pd_corrected = not np.array_equal(R_hat, R_raw)

    sd = np.sqrt(sigma2_hat)
    Sigma_hat = np.outer(sd, sd) * R_hat
    return LocationScatterEstimate(
        mu_hat=mu_hat, sigma2_hat=sigma2_hat, R_hat=R_hat, Sigma_hat=Sigma_hat,
        pd_corrected=pd_corrected, per_component=list(marginals),
        per_pair=list(pair_fits),
    )


class SequentialDPDCovariance(BaseEstimator):
    """Robust covariance and location estimator with componentwise DPD fits.

    Follows the scikit-learn covariance estimator interface: ``fit(X)``
    exposes ``location_`` and ``covariance_`` and the estimator composes with
    ``clone``/``get_params``. Each column's mean and variance is fitted on
    its own, then each pairwise correlation; robustness against casewise and
    cellwise outliers grows with ``beta`` at some efficiency cost.

    Parameters
    ----------
    beta : float, default=0.1
        Robustness tuning parameter in ``[0, 1]``; 0 is maximum likelihood.
    tol : float, default=1e-8
        Convergence tolerance of the componentwise solvers.
    max_iter : int, default=500
        Iteration cap of the marginal IRLS solver.
    init : str or MarginalParams, default="median_mad"
        Initialisation of the marginal solver.
    pd_policy : {"auto", "always", "never"}, default="auto"
        Positive-definiteness repair policy for the correlation matrix.
    eigen_floor : float, default=1e-8
        Smallest admissible eigenvalue after repair.
    threads : int or None, default=None
        Worker threads for the componentwise fits (``None`` runs serially).

    Attributes
    ----------
    location_ : ndarray of shape (p,)
    variances_ : ndarray of shape (p,)
    correlation_ : ndarray of shape (p, p)
    covariance_ : ndarray of shape (p, p)
    pd_corrected_ : bool
    result_ : LocationScatterEstimate
        Full per-component and per-pair telemetry.
    """

    def __init__(self, beta=0.1, tol=1e-8, max_iter=500, init="median_mad",
                 pd_policy="auto", eigen_floor=1e-8, threads=None):
        self.beta = beta
        self.tol = tol
        self.max_iter = max_iter
        self.init = init
        self.pd_policy = pd_policy
        self.eigen_floor = eigen_floor
        self.threads = threads

    def fit(self, X, y=None):
        X = check_data_matrix(X)
        cfg = SolverConfig(tol=self.tol, max_iter=self.max_iter, init=self.init)
        result = estimate_location_scatter(
            X, self.beta, cfg=cfg, pd_policy=self.pd_policy,
            eigen_floor=self.eigen_floor, threads=self.threads)
        self.result_ = result
        self.location_ = result.mu_hat
        self.variances_ = result.sigma2_hat
        self.correlation_ = result.R_hat
        self.covariance_ = result.Sigma_hat
        self.pd_corrected_ = result.pd_corrected
        self.n_features_in_ = X.shape[1]
        return self

    def get_precision(self):
        """Pseudo-inverse of the fitted covariance matrix."""
        self._check_fitted()
        return pinvh(self.covariance_)

    def mahalanobis(self, X):
        """Squared Mahalanobis distances of the rows of ``X`` to the fit."""
        self._check_fitted()
        X = check_data_matrix(np.atleast_2d(X), min_rows=1)
        centred = X - self.location_
        return np.einsum("ij,jk,ik->i", centred, self.get_precision(), centred)

    def _check_fitted(self):
        if not hasattr(self, "covariance_"):
            raise ValidationError("estimator is not fitted; call fit(X) first")
