"""Shared fixtures: small model configs and a small synthetic dataset.

Everything here is deterministic and sized to run in well under a second,
except the `slow` benchmark tests which build their own data.
"""
import numpy as np
import pytest

from rgn.data.synthetic import synth_generate
from rgn.schemas import HRgnConfig, MlpBaselineConfig, SRgnConfig, TrainConfig
from rgn.settings import get_settings


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    """Isolate every test from RGN_* variables in the developer's shell."""
    for var in ("RGN_DTYPE", "RGN_LOG_LEVEL", "RGN_OUTPUT_DIR", "RGN_MLFLOW_TRACKING_URI", "RGN_MLFLOW_EXPERIMENT"):
        monkeypatch.delenv(var, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def srgn_cfg():
    return SRgnConfig(d=8, k=2, dims=[6, 3])


@pytest.fixture()
def hrgn_cfg():
    return HRgnConfig(d=12, latent=[4, 2], k=2, dims=[6, 3])


@pytest.fixture()
def mlp_cfg():
    return MlpBaselineConfig(d=8, hidden=[5])


@pytest.fixture()
def tiny_train_cfg():
    return TrainConfig(model="srgn", iterations=20, batch_size=8, lr=0.01, eval_every=10, seed=0)


@pytest.fixture(scope="session")
def small_synth():
    """(manifest, table) with 40 families of 8-wide features, 8 pairs per fold."""
    return synth_generate(seed=3, n_families=40, d_raw=8)


@pytest.fixture(scope="session")
def small_synth_tri():
    return synth_generate(seed=5, n_families=40, d_raw=8, tri_subject=True)
