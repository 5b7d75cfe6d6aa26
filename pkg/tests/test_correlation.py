import numpy as np
import pytest

from dpdcov import MarginalParams, RHO_GUARD, ValidationError, fit_correlation
from oracles import grid_search_rho

STD = MarginalParams(0.0, 1.0)


def test_independent_permutations_near_zero():
    rng = np.random.default_rng(17)
    x = rng.standard_normal(500)
    xj = rng.permutation(x)
    xk = rng.permutation(x)
    est = fit_correlation(xj, xk, STD, STD, 0.3)
    oracle = grid_search_rho(xj, xk, STD, STD, 0.3)
    assert est.converged
    assert est.rho == pytest.approx(oracle, abs=1e-3)
    assert abs(est.rho) < 0.2


def test_identical_columns_hit_upper_boundary():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(200)
    est = fit_correlation(x, x.copy(), STD, STD, 0.1)
    assert est.rho == 1.0 - RHO_GUARD
    assert est.at_boundary and est.converged


def test_negated_columns_hit_lower_boundary():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(200)
    est = fit_correlation(x, -x, STD, STD, 0.1)
    assert est.rho == -(1.0 - RHO_GUARD)
    assert est.at_boundary


def test_sign_equivariance():
    rng = np.random.default_rng(23)
    z = rng.standard_normal((300, 2))
    xj = z[:, 0]
    xk = 0.6 * z[:, 0] + 0.8 * z[:, 1]
    plus = fit_correlation(xj, xk, STD, STD, 0.3)
    minus = fit_correlation(xj, -xk, STD, MarginalParams(-0.0, 1.0), 0.3)
    assert minus.rho == pytest.approx(-plus.rho, abs=1e-6)


@pytest.mark.parametrize("beta", [0.0, 0.1, 0.3, 0.5])
def test_brent_matches_grid_oracle(beta):
    rng = np.random.default_rng(100 + int(beta * 10))
    for _ in range(50):
        rho = rng.uniform(-0.85, 0.85)
        z = rng.standard_normal((250, 2))
        xj = z[:, 0]
        xk = rho * z[:, 0] + np.sqrt(1 - rho**2) * z[:, 1]
        mj = MarginalParams(float(np.mean(xj)), float(np.var(xj)))
        mk = MarginalParams(float(np.mean(xk)), float(np.var(xk)))
        est = fit_correlation(xj, xk, mj, mk, beta)
        oracle = grid_search_rho(xj, xk, mj, mk, beta)
        assert est.rho == pytest.approx(oracle, abs=1e-3)


def test_length_mismatch_rejected():
    with pytest.raises(ValidationError):
        fit_correlation(np.ones(5), np.ones(6), STD, STD, 0.3)


def test_evaluation_count_reported():
    rng = np.random.default_rng(31)
    z = rng.standard_normal((100, 2))
    est = fit_correlation(z[:, 0], z[:, 1], STD, STD, 0.2)
    assert est.evaluations > 41


def test_seed_count_validated():
    with pytest.raises(ValidationError):
        fit_correlation(np.arange(5.0), np.arange(5.0), STD, STD, 0.1, n_seeds=2)
