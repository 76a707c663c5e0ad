"""Tests for configuration management."""

import json
from pathlib import Path

import pytest
import toml

from peclet.core.config import RunConfig
from peclet.core.discretize import OperatorKind
from peclet.core.grid import Domain

SHIPPED = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.json"))


def test_config_defaults():
    """Test building a configuration with only the profile."""
    config = RunConfig.from_dict({"profile": "sin"})

    assert config.profile.name == "sin"
    assert config.profile.resolved_domain is Domain.TORUS
    assert config.kind == "elliptic"
    assert config.operator_kind is OperatorKind.ELLIPTIC
    assert config.grid.n == 512
    assert config.workers == 1
    assert config.time.window == [1e-8, 1e-1]


def test_profile_spec_with_domain_and_coeffs():
    """Test the structured profile form."""
    config = RunConfig.from_dict(
        {"profile": {"name": "poly", "domain": "channel", "coeffs": [0.0, 1.0, -1.0]}}
    )

    assert config.profile.resolved_domain is Domain.CHANNEL
    assert config.profile.coeffs == [0.0, 1.0, -1.0]
    assert RunConfig.from_dict({"profile": "couette"}).profile.resolved_domain is Domain.CHANNEL


def test_config_save_and_load_json(temp_dir):
    """Test saving and loading a JSON configuration."""
    config_path = temp_dir / "run.json"
    config = RunConfig.from_dict({"profile": "sin", "nu": [1e-3, 1e-4], "k": [2.0], "seed": 3})
    config.save_to_file(config_path)

    assert config_path.exists()
    loaded = RunConfig.from_file(config_path)
    assert loaded.nu == [1e-3, 1e-4]
    assert loaded.k == [2.0]
    assert loaded.seed == 3
    assert loaded.config_hash() == config.config_hash()


def test_config_save_and_load_toml(temp_dir):
    """Test saving and loading a TOML configuration."""
    config_path = temp_dir / "run.toml"
    config = RunConfig.from_dict({"profile": "sin", "nu": [1e-2], "kind": "hypoelliptic"})
    config.save_to_file(config_path)

    data = toml.load(config_path)
    assert data["kind"] == "hypoelliptic"

    loaded = RunConfig.from_file(config_path)
    assert loaded.operator_kind is OperatorKind.HYPOELLIPTIC
    assert loaded.nu == [1e-2]
    assert loaded.time.dt is None


def test_config_file_not_found(temp_dir):
    """Test loading a missing configuration file."""
    with pytest.raises(FileNotFoundError, match="Configuration file not found"):
        RunConfig.from_file(temp_dir / "missing.json")


def test_config_missing_profile(temp_dir):
    """Test loading a configuration without a profile."""
    config_path = temp_dir / "run.json"
    config_path.write_text(json.dumps({"nu": [1e-3]}))

    with pytest.raises(ValueError, match="Missing required configuration key"):
        RunConfig.from_file(config_path)


def test_config_invalid_json(temp_dir):
    """Test loading a malformed configuration file."""
    config_path = temp_dir / "run.json"
    config_path.write_text("{not json")

    with pytest.raises(ValueError, match="Error parsing configuration file"):
        RunConfig.from_file(config_path)


@pytest.mark.parametrize(
    "data",
    [
        {"profile": "sin", "experiment": "unknown"},
        {"profile": "sin", "kind": "parabolic"},
        {"profile": "sin", "nu": []},
        {"profile": "sin", "nu": [-1.0]},
        {"profile": "sin", "workers": 0},
        {"profile": "sin", "time": {"window": [1e-1, 1e-8]}},
    ],
)
def test_config_validation(data):
    """Test rejected parameter combinations."""
    with pytest.raises(ValueError):
        RunConfig.from_dict(data)


def test_config_overrides():
    """Test CLI overrides collapse lists to a single value."""
    config = RunConfig.from_dict({"profile": "sin", "nu": [1e-3, 1e-4], "k": [1.0, 2.0]})
    updated = config.with_overrides(experiment="pseudospec", nu=1e-5, workers=4, out="runs")

    assert updated.experiment == "pseudospec"
    assert updated.nu == [1e-5]
    assert updated.k == [1.0, 2.0]
    assert updated.workers == 4
    assert str(updated.output_path) == "runs"
    assert config.nu == [1e-3, 1e-4]


def test_config_hash_stable_and_sensitive():
    """Test the hash is a function of the content only."""
    first = RunConfig.from_dict({"profile": "sin", "nu": [1e-3]})
    second = RunConfig.from_dict({"profile": "sin", "nu": [1e-3]})

    assert first.config_hash() == second.config_hash()
    assert len(first.config_hash()) == 64
    assert first.with_overrides(seed=1).config_hash() != first.config_hash()


def test_noise_spec_builds_spectrum():
    """Test the noise section resolves to a spectrum."""
    config = RunConfig.from_dict({"profile": "sin", "noise": {"K": 2, "J": 2, "kill_zero_mode": True}})
    spectrum = config.noise.spectrum()

    assert spectrum.K == 2
    assert not spectrum.row(0)
    assert spectrum.row(1)[1] == pytest.approx(1.0 / 3.0)


def test_hypo_section_accepts_ledger_spelling():
    """Test the hypo keys as written in the ledger notation, C0 included."""
    config = RunConfig.from_dict(
        {
            "profile": "sin",
            "hypo": {"eps_beta": [1e-5, 1e-6], "eps_tilde": 0.2, "kappa0": 1e-3, "C0": 8.0},
        }
    )

    assert config.hypo.c0 == 8.0
    assert config.hypo.kappa0 == 1e-3
    assert config.hypo.eps_beta == [1e-5, 1e-6]
    assert config.hypo.ladder == "calibrated"
    assert RunConfig.from_dict({"profile": "sin", "hypo": {"c0": 2.0}}).hypo.c0 == 2.0


def test_hypo_section_rejects_unknown_ladder():
    """Test the ladder name is validated with the rest of the configuration."""
    with pytest.raises(ValueError, match="hypo.ladder"):
        RunConfig.from_dict({"profile": "sin", "hypo": {"ladder": "geometric"}})


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.name)
def test_shipped_configs_load(path):
    """Test every file under configs/ parses and names its experiment."""
    config = RunConfig.from_file(path)

    assert config.experiment is not None
    if path.name == "sin_hypo_verify.json":
        assert config.hypo.c0 == 4.0
