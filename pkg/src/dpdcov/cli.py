"""Command-line interface: estimation, simulation and diagnostics with file I/O.

Exit codes: 0 success, 2 usage or validation failure, 3 degenerate data,
4 internal numeric failure. All CSV output is RFC-4180 (CRLF line endings)
with numerics serialised to 12 significant digits.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from .diagnostics import are_tables, influence_grid
from .estimator import estimate_location_scatter
from .exceptions import DegenerateDataError, NumericError, ValidationError
from .marginal import SolverConfig
from .normal_model import MarginalParams, PairParams
from .simulation import MethodSpec, ScenarioConfig, run_scenario
from .validation import check_beta

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3
EXIT_NUMERIC = 4


def _fmt(x):
    return f"{float(x):.12g}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, (int, float, np.floating)) and
                             not isinstance(v, bool) else v for v in row])


def _read_csv_matrix(path, header, columns):
    rows = []
    ncol = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if columns is not None:
                try:
                    row = [row[j] for j in columns]
                except IndexError:
                    raise ValidationError(
                        f"line {lineno}: requested column out of range") from None
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ValidationError(f"line {lineno}: non-numeric value in {row}") from None
            if ncol is None:
                ncol = len(values)
            elif len(values) != ncol:
                raise ValidationError(
                    f"line {lineno}: expected {ncol} fields, got {len(values)}")
            rows.append(values)
    if not rows:
        raise ValidationError("input CSV contains no data rows")
    return np.asarray(rows, dtype=float)


def _parse_grid(text, name):
    """Comma list ('0,0.1,0.3') or range 'a..b' / 'a..b:step' (default step 0.1)."""
    text = text.strip()
    try:
        if ".." in text:
            span, _, step = text.partition(":")
            lo_s, _, hi_s = span.partition("..")
            lo, hi = float(lo_s), float(hi_s)
            h = float(step) if step else 0.1
            if h <= 0 or hi < lo:
                raise ValueError
            count = int(round((hi - lo) / h))
            values = [lo + i * h for i in range(count + 1)]
        else:
            values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValidationError(f"cannot parse {name} grid {text!r}") from None
    if not values:
        raise ValidationError(f"{name} grid is empty")
    return values


def _cmd_estimate(args):
    beta = check_beta(args.beta)
    columns = None
    if args.columns:
        try:
            columns = [int(tok) for tok in args.columns.split(",")]
        except ValueError:
            raise ValidationError(f"cannot parse column subset {args.columns!r}") from None
    X = _read_csv_matrix(args.input, args.header, columns)
    result = estimate_location_scatter(
        X, beta, cfg=SolverConfig(), pd_policy=args.pd_policy, threads=args.threads)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "beta": beta,
        "n": int(X.shape[0]),
        "p": int(X.shape[1]),
        "mu_hat": result.mu_hat.tolist(),
        "sigma2_hat": result.sigma2_hat.tolist(),
        "R_hat": result.R_hat.tolist(),
        "Sigma_hat": result.Sigma_hat.tolist(),
        "pd_corrected": result.pd_corrected,
        "marginals": [
            {"mu": m.params.mu, "sigma2": m.params.sigma2, "iterations": m.iterations,
             "converged": m.converged, "final_step_norm": m.final_step_norm}
            for m in result.per_component
        ],
        "correlations": [
            {"j": j, "k": k, "rho": c.rho, "converged": c.converged,
             "at_boundary": c.at_boundary, "evaluations": c.evaluations}
            for (j, k), c in zip(
                [(j, k) for j in range(X.shape[1]) for k in range(j + 1, X.shape[1])],
                result.per_pair)
        ],
    }
    text = json.dumps(payload, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _parse_scenario(path, seed_override=None):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")

    def need(key, kind):
        if key not in raw:
            raise ValidationError(f"config key {key!r} is missing")
        try:
            return kind(raw[key])
        except (TypeError, ValueError):
            raise ValidationError(f"config key {key!r} has invalid value {raw[key]!r}") from None

    n = need("n", int)
    p = need("p", int)
    replications = need("replications", int)
    if seed_override is not None:
        seed = int(seed_override)
    else:
        # wall-clock defaults would break reproducibility, so the seed is mandatory
        seed = need("seed", int)

    sigma = raw.get("sigma", "identity")
    if isinstance(sigma, str):
        if sigma not in ("identity", "block_banded"):
            raise ValidationError(f"config key 'sigma' has invalid value {sigma!r}")
        sigma_kind, sigma_matrix = sigma, None
    else:
        sigma_kind, sigma_matrix = "custom", np.asarray(sigma, dtype=float)
    rho = float(raw.get("rho", 0.7))

    cont = raw.get("contamination", {"kind": "none"})
    if not isinstance(cont, dict) or "kind" not in cont:
        raise ValidationError("config key 'contamination' must be an object with a 'kind'")
    kind = cont["kind"]
    eps = float(cont.get("eps", 0.0))
    shift = float(cont.get("shift", 5.0 if kind == "cellwise" else 0.0))
    clean_count = int(cont.get("clean_count", 600))
    per_axis = int(cont.get("per_axis_count", 100))

    methods_raw = raw.get("methods")
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ValidationError("config key 'methods' must be a non-empty list")
    methods = []
    for item in methods_raw:
        if not isinstance(item, dict) or "name" not in item:
            raise ValidationError(f"config key 'methods' has invalid entry {item!r}")
        methods.append(MethodSpec(name=item["name"], beta=float(item.get("beta", 0.0))))

    try:
        return ScenarioConfig(
            n=n, p=p, replications=replications, seed=seed, methods=tuple(methods),
            sigma_kind=sigma_kind, rho=rho, sigma=sigma_matrix, contamination=kind,
            eps=eps, shift=shift, clean_count=clean_count, per_axis_count=per_axis)
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"invalid scenario config: {exc}") from None


def _cmd_simulate(args):
    cfg = _parse_scenario(args.config, seed_override=args.seed)
    report = run_scenario(cfg, threads=args.threads)
    prefix = args.output or os.path.splitext(args.config)[0]

    config_echo = dict(report.config)
    if config_echo.get("sigma") is not None:
        config_echo["sigma"] = np.asarray(config_echo["sigma"]).tolist()
    def drop_nan(value):
        if isinstance(value, float) and value != value:
            return None
        return value

    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": config_echo,
        "wall_time": report.wall_time,
        "methods": [{k: drop_nan(v) for k, v in asdict(m).items()}
                    for m in report.methods],
    }
    with open(prefix + ".json", "w") as fh:
        json.dump(payload, fh, indent=2, default=float)
        fh.write("\n")

    rows = [
        (m.method, m.beta, m.bias_location, m.mse_location,
         m.bias_scatter, m.mse_scatter, m.convergence_rate)
        for m in report.methods
    ]
    _write_csv(prefix + ".csv",
               ["method", "beta", "bias_loc", "mse_loc", "bias_scatter",
                "mse_scatter", "conv_rate"],
               rows)
    print(f"wrote {prefix}.json and {prefix}.csv")
    return EXIT_OK


def _cmd_diagnose_are(args):
    betas = _parse_grid(args.betas, "beta")
    rhos = _parse_grid(args.rhos, "rho")
    for b in betas:
        check_beta(b)
    for r in rhos:
        if abs(r) >= 1.0:
            raise ValidationError(f"|rho| must be below 1, got {r}")
    table1, table2 = are_tables(betas, rhos)
    rows = [(r["estimand"], r["method"], r["beta"], "", r["are"]) for r in table1]
    rows += [("correlation", "smdpde", r["beta"], r["rho"], r["are_smdpde"])
             for r in table2]
    rows += [("correlation", "mdpde", r["beta"], r["rho"], r["are_mdpde"])
             for r in table2]
    _write_csv(args.output, ["estimand", "method", "beta", "rho", "are"], rows)
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_diagnose_influence(args):
    beta = check_beta(args.beta)
    if abs(args.rho) >= 1.0:
        raise ValidationError(f"|rho| must be below 1, got {args.rho}")
    model = PairParams(
        MarginalParams(args.mu1, args.sigma21),
        MarginalParams(args.mu2, args.sigma22),
        args.rho)
    if args.npts < 1:
        raise ValidationError("grid must contain at least one point")
    grid = np.linspace(args.ymin, args.ymax, args.npts)
    result = influence_grid(args.target, beta, model, grid)
    if args.target == "correlation":
        rows = [(p[0], p[1], v) for p, v in zip(result.points, result.values)]
        header = ["y1", "y2", "influence"]
    else:
        rows = [(p[0], v) for p, v in zip(result.points, result.values)]
        header = ["y", "influence"]
    _write_csv(args.output, header, rows)
    print(f"wrote {args.output}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dpdcov",
        description="Robust multivariate location/scatter estimation via sequential "
                    "minimum density power divergence.")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit location and scatter from a CSV matrix")
    est.add_argument("input", help="CSV file of numeric rows (headerless by default)")
    est.add_argument("--beta", type=float, required=True,
                     help="robustness tuning parameter in [0, 1]")
    est.add_argument("--pd-policy", choices=("auto", "always", "never"), default="auto")
    est.add_argument("--header", action="store_true",
                     help="skip the first CSV line")
    est.add_argument("--columns", default=None,
                     help="comma-separated 0-based column subset")
    est.add_argument("--threads", type=int, default=1,
                     help="worker threads for the per-column/per-pair fits "
                          "(serial by default; the GIL makes extra threads pay "
                          "off only for very long columns)")
    est.add_argument("--output", default=None, help="JSON output path (default stdout)")
    est.set_defaults(func=_cmd_estimate)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo scenario from a JSON config")
    sim.add_argument("config", help="scenario config (JSON)")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument("--threads", type=int, default=1,
                     help="worker threads across replications (serial by default)")
    sim.add_argument("--output", default=None,
                     help="output path prefix (default: config path without extension)")
    sim.set_defaults(func=_cmd_simulate)

    diag = sub.add_parser("diagnose", help="analytic efficiency and robustness grids")
    diag_sub = diag.add_subparsers(dest="subcommand", required=True)

    are = diag_sub.add_parser("are", help="asymptotic relative efficiency tables")
    are.add_argument("--betas", required=True,
                     help="comma list or range a..b[:step] of beta values")
    are.add_argument("--rhos", required=True,
                     help="comma list or range a..b[:step] of correlations "
                          "(use --rhos=-0.7,... for values starting with a minus)")
    are.add_argument("--output", default="are_tables.csv")
    are.set_defaults(func=_cmd_diagnose_are)

    infl = diag_sub.add_parser("influence", help="influence-function grids")
    infl.add_argument("--target", choices=("mean", "variance", "correlation"),
                      required=True)
    infl.add_argument("--beta", type=float, required=True)
    infl.add_argument("--mu1", type=float, default=0.0)
    infl.add_argument("--sigma21", type=float, default=1.0)
    infl.add_argument("--mu2", type=float, default=0.0)
    infl.add_argument("--sigma22", type=float, default=1.0)
    infl.add_argument("--rho", type=float, default=0.5)
    infl.add_argument("--ymin", type=float, default=-10.0)
    infl.add_argument("--ymax", type=float, default=10.0)
    infl.add_argument("--npts", type=int, default=41)
    infl.add_argument("--output", default="influence.csv")
    infl.set_defaults(func=_cmd_diagnose_influence)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
