"""Acceptance-scale runs of the shipped configurations."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from peclet.cli.main import cli

pytestmark = [pytest.mark.integration, pytest.mark.slow]

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


@pytest.fixture()
def run_shipped(write_config, temp_dir):
    """Run a file from configs/ into the temp directory and return its results."""

    def _run(name):
        data = json.loads((CONFIGS / name).read_text())
        experiment = data.pop("experiment")
        data.pop("out")
        path = write_config(data)
        result = CliRunner().invoke(cli, [experiment, "--config", str(path)])
        assert result.exit_code == 0, result.output
        return json.loads((temp_dir / "out" / "summary.json").read_text())["results"]

    return _run


@pytest.mark.parametrize(
    ("name", "target"),
    [("sin_sweep.json", 0.5), ("sin3_sweep.json", 0.6)],
)
def test_viscosity_exponent(run_shipped, name, target):
    """Test the log-corrected ν-exponent of the decay rate."""
    results = run_shipped(name)

    p = results["targets"]["p"]
    assert p["target"] == pytest.approx(target)
    assert abs(p["log_corrected"] - target) <= 0.08
    assert p["passed"] is True
    assert results["lower_bound_constant"] > 0.0


def test_hypoelliptic_wavenumber_exponent(run_shipped):
    """Test the k-exponent at ν = 1 for the hypoelliptic operator."""
    results = run_shipped("sin_hypoelliptic_k.json")

    q = results["targets"]["q"]
    assert 0.4 <= q["log_corrected"] <= 0.6
    assert q["passed"] is True


def test_channel_rate_lower_bound(run_shipped):
    """Test the Couette channel rate stays above c·λ_log."""
    results = run_shipped("couette_channel.json")

    assert results["lower_bound_constant"] > 0.0


@pytest.mark.parametrize(
    ("name", "target"),
    [("sin_mixing.json", -0.5), ("sin3_mixing.json", -1.0 / 3.0)],
)
def test_mixing_slopes(run_shipped, name, target):
    """Test the H⁻¹ decay exponent and the collapse in kt."""
    results = run_shipped(name)

    assert results["target"] == pytest.approx(target)
    assert set(results["slopes"]) == {"1.0", "2.0", "4.0"}
    for slope in results["slopes"].values():
        assert abs(slope["slope"] - target) <= 0.05
    assert results["collapse_deviation"] <= 0.05
    assert results["passed"] is True


def test_anomalous_covariance_slope(run_shipped):
    """Test ‖Q_ν‖ decreases in ν with slope at least a − 1/2 − 0.1 for a = 0.9."""
    results = run_shipped("sin_kuksin.json")

    sweep = results["sweeps"]["0.9"]
    assert sweep["judged"] is True
    assert sweep["decreasing"] is True
    assert sweep["slope"] >= 0.3 - 1e-12
    assert sweep["passed"] is True
    assert results["energy_balance_error"] < 1e-3
