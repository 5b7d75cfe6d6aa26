import numpy as np
import pytest

from dpdcov import MinDPDCovariance, SolverConfig, fit_mdpde, fit_mle


def test_mle_closed_form():
    x = np.array([[0.0], [2.0]])
    res = fit_mle(x)
    assert res.mu_hat[0] == 1.0
    assert res.Sigma_hat[0, 0] == 1.0
    assert res.converged


def test_beta_zero_is_mle():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 3))
    a = fit_mdpde(X, 0.0)
    b = fit_mle(X)
    assert np.array_equal(a.mu_hat, b.mu_hat)
    assert np.array_equal(a.Sigma_hat, b.Sigma_hat)


def test_mle_constant_column_flagged():
    X = np.column_stack([np.arange(8.0), np.full(8, 1.0)])
    with pytest.warns(UserWarning, match="column 1"):
        res = fit_mle(X)
    assert np.all(res.Sigma_hat[1] == 0.0)
    assert np.all(res.Sigma_hat[:, 1] == 0.0)


def test_mle_covariance_is_psd():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((10, 6))  # n just above p
    res = fit_mle(X)
    assert np.linalg.eigvalsh(res.Sigma_hat).min() >= -1e-12


def test_clean_bivariate_matches_coarse_grid_oracle():
    rng = np.random.default_rng(3)
    L = np.linalg.cholesky([[1.0, 0.4], [0.4, 1.0]])
    X = rng.standard_normal((1000, 2)) @ L.T
    beta = 0.3
    res = fit_mdpde(X, beta)
    assert res.converged

    # brute-force the 5-parameter objective on a grid around the MLE
    mle = fit_mle(X)
    sd = np.sqrt(np.diag(mle.Sigma_hat))
    rho0 = mle.Sigma_hat[0, 1] / (sd[0] * sd[1])
    step = 2e-2
    offsets = np.arange(-3, 4) * step
    best, best_val = None, np.inf
    for m1 in mle.mu_hat[0] + offsets:
        for m2 in mle.mu_hat[1] + offsets:
            for s1 in mle.Sigma_hat[0, 0] + offsets:
                for s2 in mle.Sigma_hat[1, 1] + offsets:
                    for r in rho0 + offsets:
                        det = s1 * s2 * (1 - r**2)
                        z1 = (X[:, 0] - m1) / np.sqrt(s1)
                        z2 = (X[:, 1] - m2) / np.sqrt(s2)
                        logf = -np.log(2 * np.pi) - 0.5 * np.log(det) \
                            - (z1**2 - 2 * r * z1 * z2 + z2**2) / (2 * (1 - r**2))
                        val = (2 * np.pi) ** -beta * det ** (-beta / 2) / (1 + beta) \
                            - (1 + 1 / beta) * np.mean(np.exp(beta * logf))
                        if val < best_val:
                            best_val, best = val, (m1, m2, s1, s2, r)
    assert abs(res.mu_hat[0] - best[0]) <= step
    assert abs(res.mu_hat[1] - best[1]) <= step
    assert abs(res.Sigma_hat[0, 0] - best[2]) <= step
    assert abs(res.Sigma_hat[1, 1] - best[3]) <= step
    rho_hat = res.Sigma_hat[0, 1] / np.sqrt(res.Sigma_hat[0, 0] * res.Sigma_hat[1, 1])
    assert abs(rho_hat - best[4]) <= step


def test_small_beta_continuity():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((400, 4))
    tiny = fit_mdpde(X, 1e-4, SolverConfig(tol=1e-12))
    mle = fit_mle(X)
    assert tiny.converged
    assert np.max(np.abs(tiny.mu_hat - mle.mu_hat)) <= 1e-3
    assert np.max(np.abs(tiny.Sigma_hat - mle.Sigma_hat)) <= 1e-3


def test_column_scaling_equivariance():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((500, 3))
    scale = np.array([2.0, 0.5, 1.0])
    a = fit_mdpde(X, 0.3)
    b = fit_mdpde(X * scale, 0.3)
    assert a.converged and b.converged
    assert np.allclose(b.mu_hat, a.mu_hat * scale, atol=1e-6)
    assert np.allclose(b.Sigma_hat, a.Sigma_hat * np.outer(scale, scale), rtol=1e-6)


def test_high_dimension_large_beta_fails_to_converge():
    for rep in range(3):
        rng = np.random.default_rng(np.random.SeedSequence([404, rep]))
        X = rng.standard_normal((2000, 30))
        res = fit_mdpde(X, 0.5)
        assert not res.converged


def test_failure_worsens_with_dimension_and_beta():
    def rate(p, beta, reps=3):
        ok = 0
        for rep in range(reps):
            rng = np.random.default_rng(np.random.SeedSequence([77, p, rep]))
            ok += fit_mdpde(rng.standard_normal((2000, p)), beta).converged
        return ok / reps

    assert rate(2, 0.1) == 1.0
    assert rate(30, 0.5) == 0.0
    assert rate(2, 0.5) >= rate(30, 0.5)
    assert rate(30, 0.1) >= rate(30, 0.5)


def test_underdetermined_declared_non_convergent():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((5, 6))
    res = fit_mdpde(X, 0.2)
    assert not res.converged
    assert res.iterations == 0


def test_sklearn_wrapper():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((300, 2))
    est = MinDPDCovariance(beta=0.2).fit(X)
    assert est.converged_
    assert est.covariance_.shape == (2, 2)
    assert est.get_params()["beta"] == 0.2


def test_underdetermined_beta_zero_also_non_convergent():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((4, 6))
    assert not fit_mdpde(X, 0.0).converged


def test_mean_var_init_converges_on_clean_data():
    rng = np.random.default_rng(14)
    X = rng.standard_normal((400, 3))
    res = fit_mdpde(X, 0.3, SolverConfig(init="mean_var"))
    assert res.converged
    ref = fit_mdpde(X, 0.3)
    assert np.allclose(res.mu_hat, ref.mu_hat, atol=1e-6)
