"""Pytest configuration for ChromaChords tests."""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add tests directory to path
sys.path.insert(0, str(Path(__file__).parent))

from utils import NetworkGuard  # noqa: E402


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers",
        "unit: Fast unit tests with no I/O"
    )
    config.addinivalue_line(
        "markers",
        "integration: Integration tests with local files only (no network)"
    )


@pytest.fixture(autouse=True)
def enforce_network_guard():
    """
    Enforce NetworkGuard for every test.

    The whole suite runs offline; this catches accidental network calls.
    """
    with NetworkGuard():
        yield


@pytest.fixture
def rng():
    """Seeded generator for property-style tests."""
    return np.random.default_rng(12345)


@pytest.fixture
def isolated_env(monkeypatch, tmp_path):
    """Run in a temp directory with no CHROMACHORDS_* variables set."""
    import os
    for key in list(os.environ):
        if key.upper().startswith("CHROMACHORDS_"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path
