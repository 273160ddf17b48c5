from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

import config
from subcash.core.scenario import ProbabilityWeights
from subcash.measures.cash_additive import Linear
from subcash.measures.subadditive import DiscountEnvelope

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def _redirect_results(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "RESULTS_DIR", tmp_path / "results")
    monkeypatch.setattr(config, "ACCEPTANCE_DIR", tmp_path / "results" / "acceptance")
    monkeypatch.setattr(config, "LOGS_DIR", tmp_path / "logs")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def half():
    return ProbabilityWeights(np.array([0.5, 0.5]))


@pytest.fixture
def lin_half(half):
    return Linear(half)


@pytest.fixture
def x_loss_gain():
    return np.array([-10.0, 20.0])


@pytest.fixture
def envelope_09_10():
    return DiscountEnvelope.constant(0.9, 1.0, 2)


@pytest.fixture
def fixtures_dir():
    return FIXTURES
