import json

import numpy as np
import pytest

from lib.config import OracleConfig


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def small_cfg():
    """Oracle settings cut down so that suites and searches finish in test time."""
    return OracleConfig(
        seed=42,
        grid_resolution=0.02,
        grid_budget=2000,
        dirichlet_samples=2000,
        refine_samples=200,
        mc_samples=40_000,
        mc_batches=20,
    )


@pytest.fixture
def write_json(tmp_path):
    def _write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path
    return _write


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    for name in ("RENYI_BET_SEED", "RENYI_BET_ORACLE_CONFIG", "RENYI_BET_MC_SAMPLES"):
        monkeypatch.delenv(name, raising=False)
