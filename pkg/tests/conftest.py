# tests/conftest.py
from fractions import Fraction

import numpy as np
import pytest

from cuspfreq import services
from cuspfreq.arith import Surd
from cuspfreq.cf import CFParams
from cuspfreq.fixtures import fixture_store


@pytest.fixture
def nicf():
    """Nearest-integer parameters (-1/2, 1/2)."""
    return CFParams.ab(Fraction(-1, 2), Fraction(1, 2))


@pytest.fixture
def minus_one_one():
    return CFParams.ab(-1, 1)


@pytest.fixture
def golden():
    return Surd.of(1, 1, 5, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def isolated_fixtures(tmp_path, monkeypatch):
    """Every test reads and writes calibration fixtures in its own directory."""
    monkeypatch.setattr(fixture_store, "directory", tmp_path / "fixtures")
    monkeypatch.setattr(services, "_boundary_cache", {})
    return fixture_store


@pytest.fixture
def coarse_attractor():
    """Coarser grid for unit tests; the grid also sets the seed count."""
    return 0.02


@pytest.fixture
def nicf_boundary_x(nicf, coarse_attractor):
    bx, _ = services.get_boundary_x(nicf, grid=coarse_attractor)
    return bx
