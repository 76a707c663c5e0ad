"""Pytest configuration and fixtures."""

import json
import shutil
import tempfile
from pathlib import Path

import pytest

from peclet.core.profiles import make_profile


@pytest.fixture()
def temp_dir():
    """Create a temporary directory for tests."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture()
def sin_profile():
    """u = sin y on a coarse torus grid."""
    return make_profile("sin", "torus", 64)


@pytest.fixture()
def fine_sin_profile():
    return make_profile("sin", "torus", 256)


@pytest.fixture()
def zero_profile():
    """The trivial shear; the mode operator is pure diffusion."""
    return make_profile("zero", "torus", 64)


@pytest.fixture()
def couette_profile():
    """u = y − 1/2 in the no-flux channel."""
    return make_profile("couette", "channel", 64)


@pytest.fixture()
def write_config(temp_dir):
    """Write a run configuration and return its path."""

    def _write(data, name="run.json"):
        path = temp_dir / name
        data = {"out": str(temp_dir / "out"), **data}
        path.write_text(json.dumps(data))
        return path

    return _write
