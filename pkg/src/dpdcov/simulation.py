"""Monte-Carlo harness: data generation, contamination schemes and bias/MSE metrics.

Replication ``r`` of a scenario draws its random stream from
``numpy.random.SeedSequence([seed, r])``, so reports are deterministic for a
given configuration regardless of how many worker threads execute the
replications.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimator import estimate_location_scatter
from .exceptions import DegenerateDataError, NumericError, ValidationError
from .marginal import SolverConfig
from .mdpde import fit_mdpde, fit_mle
from .validation import check_beta

_SIGMA_KINDS = ("identity", "block_banded", "custom")
_CONTAMINATIONS = ("none", "casewise", "cellwise")
_METHODS = ("mle", "smdpde", "mdpde")


@dataclass(frozen=True)
class MethodSpec:
    """One estimation method to run per replication."""

    name: str
    beta: float = 0.0

    def __post_init__(self):
        if self.name not in _METHODS:
            raise ValidationError(f"method must be one of {_METHODS}, got {self.name!r}")
        check_beta(self.beta)

    @property
    def label(self):
        return self.name if self.name == "mle" else f"{self.name}(beta={self.beta:g})"


@dataclass(frozen=True)
class ScenarioConfig:
    """Design of one simulation scenario."""

    n: int
    p: int
    replications: int
    seed: int
    methods: tuple = (MethodSpec("mle"),)
    sigma_kind: str = "identity"
    rho: float = 0.7
    sigma: object = None
    contamination: str = "none"
    eps: float = 0.0
    shift: float = 0.0
    clean_count: int = 600
    per_axis_count: int = 100

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"n must be at least 2, got {self.n}")
        if self.p < 1:
            raise ValidationError(f"p must be at least 1, got {self.p}")
        if self.replications < 1:
            raise ValidationError(f"replications must be at least 1, got {self.replications}")
        if self.sigma_kind not in _SIGMA_KINDS:
            raise ValidationError(f"sigma_kind must be one of {_SIGMA_KINDS}")
        if self.sigma_kind == "custom" and self.sigma is None:
            raise ValidationError("sigma_kind 'custom' requires the sigma matrix")
        if self.sigma_kind == "block_banded" and self.p < 2:
            raise ValidationError("block_banded covariance requires p >= 2")
        if self.contamination not in _CONTAMINATIONS:
            raise ValidationError(f"contamination must be one of {_CONTAMINATIONS}")
        if self.contamination == "casewise" and not 0.0 <= self.eps < 1.0:
            raise ValidationError(f"eps must lie in [0, 1), got {self.eps}")
        if self.contamination == "cellwise":
            if self.sigma_kind != "identity":
                raise ValidationError("cellwise contamination is defined for identity sigma")
            expected = self.clean_count + self.p * self.per_axis_count
            if self.n != expected:
                raise ValidationError(
                    f"cellwise design needs n = clean_count + p * per_axis_count = {expected}, "
                    f"got n = {self.n}")
        if not self.methods:
            raise ValidationError("at least one method is required")

    def true_params(self):
        """Parameters of the uncontaminated component: (mu, Sigma)."""
        if self.sigma_kind == "identity":
            Sigma = np.eye(self.p)
        elif self.sigma_kind == "block_banded":
            Sigma = gen_block_banded(self.p, self.rho)
        else:
            Sigma = np.asarray(self.sigma, dtype=float)
            if Sigma.shape != (self.p, self.p):
                raise ValidationError(f"sigma must be {self.p}x{self.p}, got {Sigma.shape}")
        return np.zeros(self.p), Sigma


@dataclass(frozen=True)
class MethodReport:
    """Aggregated metrics of one method over the converged replications."""

    method: str
    beta: float
    bias_location: float
    mse_location: float
    bias_scatter: float
    mse_scatter: float
    convergence_rate: float
    n_converged: int


@dataclass
class SimReport:
    """Scenario echo plus per-method metrics."""

    config: dict
    methods: list = field(default_factory=list)
    wall_time: float = 0.0


def gen_block_banded(p, rho=0.7):
    """Block-banded covariance: a ``rho^|i-j|`` Toeplitz block of size ``floor(p/2)``
    in the upper-left corner, identity elsewhere. For ``p = 2`` the matrix is
    ``[[1, rho], [rho, 1]]``."""
    if p < 2:
        raise ValidationError(f"block-banded covariance needs p >= 2, got {p}")
    if abs(rho) > 1.0:
        raise ValidationError(f"|rho| must not exceed 1, got {rho}")
    if p == 2:
        return np.array([[1.0, rho], [rho, 1.0]])
    p1 = p // 2
    idx = np.arange(p1)
    Sigma = np.eye(p)
    Sigma[:p1, :p1] = rho ** np.abs(idx[:, None] - idx[None, :])
    return Sigma


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_mvn(n, mu, Sigma, seed):
    """Draw ``n`` rows from N(mu, Sigma) by Cholesky; deterministic given ``seed``."""
    mu = np.asarray(mu, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    try:
        L = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        raise ValidationError("Sigma must be positive definite") from None
    Z = _rng(seed).standard_normal((n, mu.size))
    return mu + Z @ L.T


def contaminate_casewise(n, p, eps, shift, Sigma, seed):
    """Mixture sample: each row is N(0, Sigma) w.p. ``1 - eps``, else
    N(shift * ones, I)."""
    if not 0.0 <= eps <= 1.0:
        raise ValidationError(f"eps must lie in [0, 1], got {eps}")
    rng = _rng(seed)
    contaminated = rng.random(n) < eps
    X = sample_mvn(n, np.zeros(p), np.asarray(Sigma, dtype=float), rng)
    noise = rng.standard_normal((n, p)) + shift
    X[contaminated] = noise[contaminated]
    return X


def contaminate_cellwise(seed, p=4, clean_count=600, per_axis_count=100, shift=5.0):
    """Cellwise design: ``clean_count`` rows of N(0, I_p) followed by ``p``
    blocks of ``per_axis_count`` rows from N(shift * e_i, I_p)."""
    rng = _rng(seed)
    n = clean_count + p * per_axis_count
    X = rng.standard_normal((n, p))
    for i in range(p):
        start = clean_count + i * per_axis_count
        X[start:start + per_axis_count, i] += shift
    return X


def bias_mse(estimates, mu_true, Sigma_true):
    """The four replication metrics.

    ``estimates`` is a non-empty list of objects exposing ``mu_hat`` and
    ``Sigma_hat`` (or ``(mu, Sigma)`` pairs). Location bias is the L2 norm of
    the average location error; scatter bias the Frobenius norm of the
    average scatter error; the MSEs average the squared norms over
    replications.
    """
    if len(estimates) == 0:
        raise ValidationError("estimates list is empty")
    mu_true = np.asarray(mu_true, dtype=float)
    Sigma_true = np.asarray(Sigma_true, dtype=float)
    mus, sigmas = [], []
    for est in estimates:
        if hasattr(est, "mu_hat"):
            mu, Sigma = est.mu_hat, est.Sigma_hat
        else:
            mu, Sigma = est
        mu = np.asarray(mu, dtype=float)
        Sigma = np.asarray(Sigma, dtype=float)
        if mu.shape != mu_true.shape or Sigma.shape != Sigma_true.shape:
            raise ValidationError("estimate dimensions do not match the truth")
        mus.append(mu)
        sigmas.append(Sigma)
    mus = np.stack(mus)
    sigmas = np.stack(sigmas)
    return {
        "bias_location": float(np.linalg.norm(mus.mean(axis=0) - mu_true)),
        "mse_location": float(np.mean(np.sum((mus - mu_true) ** 2, axis=1))),
        "bias_scatter": float(np.linalg.norm(sigmas.mean(axis=0) - Sigma_true, ord="fro")),
        "mse_scatter": float(np.mean(
            np.sum((sigmas - Sigma_true) ** 2, axis=(1, 2)))),
    }


def _generate(cfg, mu_true, Sigma_true, rep):
    seed = np.random.SeedSequence([cfg.seed, rep])
    if cfg.contamination == "none":
        return sample_mvn(cfg.n, mu_true, Sigma_true, seed)
    if cfg.contamination == "casewise":
        return contaminate_casewise(cfg.n, cfg.p, cfg.eps, cfg.shift, Sigma_true, seed)
    return contaminate_cellwise(seed, p=cfg.p, clean_count=cfg.clean_count,
                                per_axis_count=cfg.per_axis_count, shift=cfg.shift)


def _fit_method(spec, X, solver_cfg):
    try:
        if spec.name == "mle":
            res = fit_mle(X)
        elif spec.name == "mdpde":
            res = fit_mdpde(X, spec.beta, cfg=solver_cfg)
        else:
            res = estimate_location_scatter(X, spec.beta, cfg=solver_cfg)
    except (DegenerateDataError, NumericError):
        # a failed replication is counted, not fatal
        return False, None, None
    return res.converged, res.mu_hat, res.Sigma_hat


def run_scenario(cfg, threads=None, solver_cfg=None):
    """Run every replication of a scenario and aggregate per-method metrics.

    Replications are independent tasks (parallelisable via ``threads``);
    metrics aggregate only the replications in which a method converged, and
    ``convergence_rate`` reports that fraction. Failed methods keep NaN
    metrics rather than aborting the run.
    """
    if not isinstance(cfg, ScenarioConfig):
        raise ValidationError("cfg must be a ScenarioConfig")
    solver_cfg = solver_cfg or SolverConfig()
    mu_true, Sigma_true = cfg.true_params()
    start = time.perf_counter()

    def one_replication(rep):
        X = _generate(cfg, mu_true, Sigma_true, rep)
        return [_fit_method(spec, X, solver_cfg) for spec in cfg.methods]

    if threads is None or threads <= 1:
        results = [one_replication(r) for r in range(cfg.replications)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_replication, range(cfg.replications)))

    report = SimReport(config=asdict(cfg) | {"methods": [s.label for s in cfg.methods]})
    for i, spec in enumerate(cfg.methods):
        fits = [res[i] for res in results]
        good = [(mu, Sigma) for ok, mu, Sigma in fits if ok]
        if good:
            metrics = bias_mse(good, mu_true, Sigma_true)
        else:
            metrics = {k: float("nan") for k in
                       ("bias_location", "mse_location", "bias_scatter", "mse_scatter")}
        report.methods.append(MethodReport(
            method=spec.name, beta=spec.beta, convergence_rate=len(good) / len(fits),
            n_converged=len(good), **metrics))
    report.wall_time = time.perf_counter() - start
    return report
