import csv
import json

import numpy as np
import pytest

from dpdcov.cli import main
from dpdcov.simulation import contaminate_casewise, sample_mvn


def _write_csv(path, X):
    with open(path, "w") as fh:
        for row in np.atleast_2d(X):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


@pytest.fixture()
def clean_csv(tmp_path):
    X = sample_mvn(300, np.zeros(2), np.eye(2), 12345)
    path = tmp_path / "clean.csv"
    _write_csv(path, X)
    return path, X


class TestEstimate:
    def test_beta_zero_reports_column_means(self, clean_csv, tmp_path):
        path, X = clean_csv
        out = tmp_path / "est.json"
        code = main(["estimate", str(path), "--beta", "0", "--output", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        for j in range(2):
            assert f"{payload['mu_hat'][j]:.12g}" == f"{np.mean(X[:, j]):.12g}"
            assert f"{payload['sigma2_hat'][j]:.12g}" == f"{np.var(X[:, j]):.12g}"

    def test_round_trip_reassembles_covariance(self, clean_csv, tmp_path):
        path, _ = clean_csv
        out = tmp_path / "est.json"
        assert main(["estimate", str(path), "--beta", "0.3", "--output", str(out)]) == 0
        payload = json.loads(out.read_text())
        sd = np.sqrt(np.asarray(payload["sigma2_hat"]))
        rebuilt = np.outer(sd, sd) * np.asarray(payload["R_hat"])
        assert np.array_equal(rebuilt, np.asarray(payload["Sigma_hat"]))

    def test_beta_out_of_range(self, clean_csv, capsys):
        path, _ = clean_csv
        assert main(["estimate", str(path), "--beta", "1.5"]) == 2
        assert "[0, 1]" in capsys.readouterr().err

    def test_malformed_csv_reports_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0,oops\n")
        assert main(["estimate", str(path), "--beta", "0.1"]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_constant_column_exit_code(self, tmp_path, capsys):
        path = tmp_path / "const.csv"
        X = np.column_stack([np.arange(20.0), np.full(20, 7.0)])
        _write_csv(path, X)
        assert main(["estimate", str(path), "--beta", "0.1"]) == 3
        assert "column 1" in capsys.readouterr().err

    def test_contaminated_sample_beta_comparison(self, tmp_path):
        X = contaminate_casewise(1000, 2, 0.1, 20.0, np.eye(2), 99)
        path = tmp_path / "contam.csv"
        _write_csv(path, X)
        robust_out = tmp_path / "robust.json"
        mle_out = tmp_path / "mle.json"
        assert main(["estimate", str(path), "--beta", "0.3",
                     "--output", str(robust_out)]) == 0
        assert main(["estimate", str(path), "--beta", "0",
                     "--output", str(mle_out)]) == 0
        robust = json.loads(robust_out.read_text())
        mle = json.loads(mle_out.read_text())
        assert np.max(np.abs(np.asarray(robust["Sigma_hat"]) - np.eye(2))) < 0.2
        assert np.all(np.asarray(mle["mu_hat"]) > 1.0)  # dragged ~ eps * shift

    def test_header_and_column_subset(self, tmp_path):
        path = tmp_path / "head.csv"
        X = sample_mvn(100, np.zeros(3), np.eye(3), 5)
        with open(path, "w") as fh:
            fh.write("a,b,c\n")
            for row in X:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        out = tmp_path / "est.json"
        assert main(["estimate", str(path), "--beta", "0", "--header",
                     "--columns", "0,2", "--output", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["p"] == 2
        assert payload["mu_hat"][1] == pytest.approx(np.mean(X[:, 2]), abs=1e-12)


class TestSimulate:
    def _config(self, tmp_path, **overrides):
        cfg = {
            "n": 300, "p": 2, "replications": 3, "seed": 9,
            "methods": [{"name": "mle"}, {"name": "smdpde", "beta": 0.1}],
        }
        cfg.update(overrides)
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_outputs_written_and_deterministic(self, tmp_path):
        path = self._config(tmp_path)
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        assert main(["simulate", str(path), "--output", str(out1)]) == 0
        assert main(["simulate", str(path), "--output", str(out2)]) == 0
        csv1 = (tmp_path / "run1.csv").read_bytes()
        csv2 = (tmp_path / "run2.csv").read_bytes()
        assert csv1 == csv2
        payload = json.loads((tmp_path / "run1.json").read_text())
        assert payload["config"]["seed"] == 9
        assert len(payload["methods"]) == 2

    def test_csv_layout(self, tmp_path):
        path = self._config(tmp_path)
        out = tmp_path / "run"
        assert main(["simulate", str(path), "--output", str(out)]) == 0
        with open(tmp_path / "run.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["method", "beta", "bias_loc", "mse_loc",
                           "bias_scatter", "mse_scatter", "conv_rate"]
        assert rows[1][0] == "mle"
        assert float(rows[2][6]) == 1.0

    def test_zero_replications_rejected(self, tmp_path, capsys):
        path = self._config(tmp_path, replications=0)
        assert main(["simulate", str(path)]) == 2
        assert "replications" in capsys.readouterr().err

    def test_missing_seed_rejected(self, tmp_path, capsys):
        cfg = {"n": 100, "p": 2, "replications": 2,
               "methods": [{"name": "mle"}]}
        path = tmp_path / "noseed.json"
        path.write_text(json.dumps(cfg))
        assert main(["simulate", str(path)]) == 2
        assert "seed" in capsys.readouterr().err

    def test_differential_convergence_reported(self, tmp_path):
        # at this scale the sequential fits always converge while the
        # simultaneous IRLS never does
        cfg = {
            "n": 2000, "p": 30, "replications": 2, "seed": 3,
            "methods": [{"name": "smdpde", "beta": 0.5},
                        {"name": "mdpde", "beta": 0.5}],
        }
        path = tmp_path / "conv.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "conv"
        assert main(["simulate", str(path), "--output", str(out)]) == 0
        with open(tmp_path / "conv.csv", newline="") as fh:
            rows = {r[0]: r for r in list(csv.reader(fh))[1:]}
        assert float(rows["smdpde"][6]) == 1.0
        assert float(rows["mdpde"][6]) < 1.0
        # metrics of an all-failed method serialise as strict-JSON nulls
        payload = json.loads((tmp_path / "conv.json").read_text(), parse_constant=None)
        mdpde = [m for m in payload["methods"] if m["method"] == "mdpde"][0]
        assert mdpde["mse_scatter"] is None
        assert mdpde["convergence_rate"] == 0.0


class TestDiagnose:
    def test_are_grid(self, tmp_path):
        out = tmp_path / "are.csv"
        assert main(["diagnose", "are", "--betas", "0,0.1,0.3,0.5,0.7",
                     "--rhos=-0.7,-0.5,-0.3,0,0.3,0.5,0.7",
                     "--output", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        assert header == ["estimand", "method", "beta", "rho", "are"]
        corr = [r for r in body if r[0] == "correlation" and r[1] == "smdpde"]
        assert len(corr) == 35
        by_cell = {(r[3], r[2]): r[4] for r in corr}
        for rho in ("0.3", "0.5", "0.7"):
            for beta in ("0.1", "0.3", "0.5", "0.7"):
                assert by_cell[(rho, beta)] == by_cell[("-" + rho, beta)]
        for r in body:
            if r[2] == "0" and r[0] == "correlation":
                assert float(r[4]) == pytest.approx(100.0, abs=1e-9)

    def test_are_range_syntax(self, tmp_path):
        out = tmp_path / "are.csv"
        assert main(["diagnose", "are", "--betas", "0,0.5",
                     "--rhos=-0.4..0.4:0.2", "--output", str(out)]) == 0
        with open(out, newline="") as fh:
            body = list(csv.reader(fh))[1:]
        assert len([r for r in body if r[0] == "correlation"]) == 2 * 2 * 5

    def test_influence_mean_mle(self, tmp_path):
        out = tmp_path / "inf.csv"
        assert main(["diagnose", "influence", "--target", "mean", "--beta", "0",
                     "--ymin", "-5", "--ymax", "5", "--npts", "11",
                     "--output", str(out)]) == 0
        with open(out, newline="") as fh:
            body = list(csv.reader(fh))[1:]
        for y_str, val_str in body:
            assert float(val_str) == -float(y_str)

    def test_influence_correlation_triples(self, tmp_path):
        out = tmp_path / "inf2.csv"
        assert main(["diagnose", "influence", "--target", "correlation",
                     "--beta", "0.1", "--rho", "0.5", "--npts", "7",
                     "--output", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["y1", "y2", "influence"]
        assert len(rows) == 1 + 49

    def test_empty_grid_rejected(self, capsys, tmp_path):
        assert main(["diagnose", "influence", "--target", "mean", "--beta", "0.1",
                     "--npts", "0", "--output", str(tmp_path / "x.csv")]) == 2

    def test_invalid_rho_rejected(self, tmp_path, capsys):
        assert main(["diagnose", "are", "--betas", "0.1", "--rhos", "0,1.0",
                     "--output", str(tmp_path / "x.csv")]) == 2
        assert "rho" in capsys.readouterr().err


def test_rfc4180_line_endings(tmp_path):
    out = tmp_path / "are.csv"
    assert main(["diagnose", "are", "--betas", "0.1", "--rhos", "0",
                 "--output", str(out)]) == 0
    assert b"\r\n" in out.read_bytes()


def test_estimate_stdout_when_no_output(tmp_path, capsys):
    X = sample_mvn(60, np.zeros(2), np.eye(2), 77)
    path = tmp_path / "x.csv"
    _write_csv(path, X)
    assert main(["estimate", str(path), "--beta", "0.1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["p"] == 2


def test_influence_variance_target(tmp_path):
    out = tmp_path / "var.csv"
    assert main(["diagnose", "influence", "--target", "variance", "--beta", "0",
                 "--ymin", "-3", "--ymax", "3", "--npts", "7",
                 "--output", str(out)]) == 0
    with open(out, newline="") as fh:
        body = list(csv.reader(fh))[1:]
    for y_str, val_str in body:
        y = float(y_str)
        assert float(val_str) == pytest.approx(y**2 - 1.0, abs=1e-9)


def test_simulate_custom_sigma_and_seed_override(tmp_path):
    cfg = {
        "n": 200, "p": 2, "replications": 2, "seed": 1,
        "sigma": [[2.0, 0.5], [0.5, 1.0]],
        "methods": [{"name": "mle"}],
    }
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(cfg))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["simulate", str(path), "--output", str(out_a)]) == 0
    assert main(["simulate", str(path), "--seed", "2", "--output", str(out_b)]) == 0
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    assert a["config"]["sigma"] == [[2.0, 0.5], [0.5, 1.0]]
    assert a["config"]["seed"] == 1 and b["config"]["seed"] == 2
    assert a["methods"][0]["mse_scatter"] != b["methods"][0]["mse_scatter"]
