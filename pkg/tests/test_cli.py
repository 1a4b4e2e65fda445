import csv
import json
import math

import numpy as np
import pytest

from conewave.cli import main, verify
from conewave.cli.runconfig import config_hash, merge_config, parse_config_file
from conewave.cli.writers import format_value, render_table
from conewave.core.config import settings
from conewave.core.exceptions import AccuracyBudgetError, InvalidConfigError
from conewave.models.schemas import Cone, EstimateReport, MorawetzConfig, MorawetzResult
from conewave.services import estimate_harness as harness
from conewave.services.bessel_hankel import lambda_grid


def _read_csv(text):
    rows = list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))
    comments = [line for line in text.splitlines() if line.startswith("#")]
    return rows, comments


# ---------------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------------

def test_kernel_on_the_plane(capsys):
    code = main(["kernel", "--rho", "1", "--t", "2", "--r1", "0.5", "--r2", "0.5", "--dtheta", "0"])
    assert code == 0
    rows, comments = _read_csv(capsys.readouterr().out)
    assert comments[1] == "# command = kernel"
    (row,) = rows
    assert row["region"] == "III"
    assert float(row["K_geom"]) == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-12)
    assert row["K_geom"].startswith("0.0795775")
    assert float(row["K_diff"]) == 0.0
    assert row["config_hash"] == comments[2].split(" = ")[1]


def test_kernel_outside_the_light_cone(capsys):
    assert main(["kernel", "--rho", "1", "--t", "0.5", "--r1", "1", "--r2", "1", "--dtheta", str(math.pi)]) == 0
    (row,), _ = _read_csv(capsys.readouterr().out)
    assert row["region"] == "I"
    assert float(row["K_total"]) == 0.0


def test_kernel_random_samples_are_reproducible(tmp_path):
    args = ["kernel", "--rho", "0.6", "--t", "3", "--samples", "5", "--seed", "4"]
    assert main(args + ["--output", str(tmp_path / "a.csv"), "--threads", "1"]) == 0
    assert main(args + ["--output", str(tmp_path / "b.csv"), "--threads", "3"]) == 0
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    rows, _ = _read_csv(a)
    assert len(rows) == 6


def test_missing_required_option(capsys):
    assert main(["kernel", "--t", "1"]) == 2
    assert "usage: conewave kernel" in capsys.readouterr().err


def test_invalid_values_exit_with_configuration_error(capsys):
    assert main(["kernel", "--rho", "-1", "--t", "1"]) == 2
    assert main(["strichartz", "--rho", "1", "--p", "2", "--q", "8"]) == 2
    assert main(["dispersive", "--rho", "1", "--t-lo", "10", "--t-hi", "5"]) == 2
    assert main(["kernel", "--rho", "1", "--t", "1", "--config", "/nonexistent/run.cfg"]) == 2


def test_unknown_subcommand():
    assert main(["spin"]) == 2


# ---------------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------------

def test_flags_override_the_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# kernel run\nrho = 2.0\nt = 1.5   # seconds\n\nsamples = 3\n")
    cfg = merge_config("kernel", {"rho": 1.0, "t": None}, str(path))
    assert cfg.rho == 1.0
    assert cfg.t == 1.5
    assert cfg.samples == 3


def test_config_file_lists_and_dashes(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("mus = 0.5, 1, 2\nt-lo = 2\n")
    assert parse_config_file(str(path)) == {"mus": ["0.5", "1", "2"], "t_lo": "2"}
    assert merge_config("strichartz", {}, str(path)).mus == [0.5, 1.0, 2.0]


def test_malformed_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("rho 2\n")
    with pytest.raises(InvalidConfigError):
        parse_config_file(str(path))
    with pytest.raises(InvalidConfigError):
        merge_config("kernel", {"unknown_key": 1})


def test_config_hash_ignores_threads_and_outputs():
    a = merge_config("kernel", {"rho": 1.0, "t": 2.0, "threads": 1})
    b = merge_config("kernel", {"rho": 1.0, "t": 2.0, "threads": 8, "output": "x.csv"})
    c = merge_config("kernel", {"rho": 1.0, "t": 2.0, "seed": 1})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 16


# ---------------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------------

def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert float(format_value(1.0 / 3.0)) == 1.0 / 3.0
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(7) == "7"
    assert format_value(float("inf")) == "inf"
    assert format_value(float("nan")) == "nan"


def test_render_table():
    reports = [
        EstimateReport(check_name="a", passed=True),
        EstimateReport(check_name="long_check_name", passed=False),
        EstimateReport(check_name="c"),
    ]
    lines = render_table(reports).splitlines()
    assert lines[0].split() == ["check", "result"]
    assert lines[1].split() == ["a", "pass"]
    assert lines[2].split() == ["long_check_name", "FAIL"]
    assert lines[3].split() == ["c", "reported"]


def test_report_json_uses_pass_key():
    data = json.loads(EstimateReport(check_name="x", slope=-0.5, ci=(-0.6, -0.4), passed=True).to_json())
    assert data["pass"] is True
    assert data["ci"] == [-0.6, -0.4]


# ---------------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------------

def _fixed(name, passed):
    def check(suite, rng, threads):
        return EstimateReport(check_name=name, values={"draw": float(rng.random())}, passed=passed)

    return check


def _exhausted(suite, rng, threads):
    raise AccuracyBudgetError("node cap reached")


def _broken(suite, rng, threads):
    raise ValueError("empty time list")


@pytest.mark.parametrize(
    "checks, expected",
    [
        ([("a", _fixed("a", True)), ("b", _fixed("b", None))], 0),
        ([("a", _fixed("a", True)), ("b", _fixed("b", False))], 1),
        ([("a", _fixed("a", True)), ("b", _broken)], 1),
        ([("a", _fixed("a", False)), ("b", _exhausted)], 3),
    ],
)
def test_verify_exit_codes(monkeypatch, capsys, checks, expected):
    monkeypatch.setattr(verify, "CHECKS", checks)
    assert main(["verify", "--suite", "quick"]) == expected
    assert "check" in capsys.readouterr().out


def test_verify_writes_reports(monkeypatch, tmp_path):
    monkeypatch.setattr(verify, "CHECKS", [("a", _fixed("a", True)), ("b", _fixed("b", None))])
    assert main(["verify", "--output-dir", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "a.json").read_text())["pass"] is True
    rows, comments = _read_csv((tmp_path / "summary.csv").read_text())
    assert [r["check"] for r in rows] == ["a", "b"]
    assert [r["pass"] for r in rows] == ["true", "reported"]
    assert "# suite = quick" in comments


def test_verify_streams_are_seeded_per_check(monkeypatch):
    monkeypatch.setattr(verify, "CHECKS", [("a", _fixed("a", True)), ("b", _fixed("b", True))])
    first, _ = verify.run_suite("quick", 7, threads=1)
    again, _ = verify.run_suite("quick", 7, threads=4)
    only_b, _ = verify.run_suite("quick", 7, only=["b"])
    assert [r.values for r in first] == [r.values for r in again]
    assert first[0].values != first[1].values
    assert only_b[0].values == first[1].values


@pytest.mark.slow
def test_wedge_command_against_images(tmp_path):
    out = tmp_path / "wedge.csv"
    code = main(["wedge", "--alpha", str(math.pi / 2.0), "--bc", "neumann", "--t", "1.5", "--points", "4",
                 "--sigma", "0.5", "--r0", "2", "--output", str(out)])
    assert code == 0
    rows, comments = _read_csv(out.read_text())
    assert len(rows) == 4
    assert all(r["bc"] == "neumann" for r in rows)
    diffs = np.array([float(r["abs_diff"]) for r in rows])
    assert np.max(diffs) <= 1e-5
    assert any(c.startswith("# boundary_residual") for c in comments)


# ---------------------------------------------------------------------------------
# morawetz and wedge exit codes
# ---------------------------------------------------------------------------------

def _morawetz_results(ratios):
    return [MorawetzResult(ratio=r, lhs=r, rhs=1.0, lhs_frequency_side=1.1 * r, tail_estimate=0.1 * r)
            for r in ratios]


@pytest.mark.parametrize("fresh, expected", [([0.5, 0.9, 1.0], 0), ([0.5, 1.2, 0.7], 1)])
def test_morawetz_checks_fresh_draws_against_the_frozen_constant(monkeypatch, tmp_path, fresh, expected):
    monkeypatch.setattr(verify, "morawetz_coarse_constant", lambda *args, **kwargs: (1.05, 1.0))
    monkeypatch.setattr(verify, "morawetz_draws", lambda cone, cfg, draws, *args, **kwargs: _morawetz_results(fresh))
    out = tmp_path / "morawetz.json"
    assert main(["morawetz", "--rho", str(2.0 / 3.0), "--draws", "3", "--output", str(out)]) == expected
    report = json.loads(out.read_text())
    assert report["values"]["frozen_constant"] == 1.05
    assert report["values"]["violations"] == expected
    assert report["values"]["analytic_bound"] > 0.0


def test_morawetz_constant_is_fitted_on_the_coarse_scan():
    cone = Cone(rho=2.0 / 3.0)
    cfg = MorawetzConfig(m=1, alpha_mz=0.3, t_max=5.0)
    frozen, coarse = verify.morawetz_coarse_constant(cone, cfg, 2, 1, np.random.default_rng(0), threads=1)
    assert frozen == pytest.approx(settings.BOUND_SAFETY * coarse, rel=1e-15)
    assert coarse < harness.morawetz_mode_bound(cone, cfg, 2)
    grid = lambda_grid(2.0 * math.sqrt(2.0), t_max=cfg.t_max, r_max=10.0)
    f, g = harness.harmonic_band_data(cone, grid, 2, 1)
    assert harness.morawetz_ratio(cone, cfg, f, g).ratio <= coarse


@pytest.mark.parametrize("error, expected", [(0.0, 0), (1e-12, 0), (1e-6, 3)])
def test_wedge_exit_code_follows_the_image_oracle(monkeypatch, tmp_path, error, expected):
    def comparison(w, t, points, **kwargs):
        spectral = [1.0 + 0.1 * i for i in range(len(points))]
        return spectral, [u + error for u in spectral], 1e-15

    monkeypatch.setattr(verify, "wedge_comparison", comparison)
    out = tmp_path / "wedge.csv"
    assert main(["wedge", "--alpha", str(math.pi / 2.0), "--points", "3", "--output", str(out)]) == expected
    rows, comments = _read_csv(out.read_text())
    assert len(rows) == 3
    assert any(c.startswith("# max_relative_deviation") for c in comments)


def test_wedge_without_an_image_oracle_exits_cleanly(monkeypatch, tmp_path):
    monkeypatch.setattr(verify, "wedge_comparison", lambda w, t, points, **kwargs: ([0.5] * len(points), None, 0.0))
    out = tmp_path / "wedge.csv"
    assert main(["wedge", "--alpha", "2.0", "--points", "2", "--output", str(out)]) == 0
    rows, comments = _read_csv(out.read_text())
    assert [r["abs_diff"] for r in rows] == ["", ""]
    assert not any(c.startswith("# max_relative_deviation") for c in comments)
