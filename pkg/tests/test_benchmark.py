"""Desk-scale benchmark on the synthetic kinship data.

Runs full five-fold cross-validation, so it is marked slow:
    pytest -m slow tests/test_benchmark.py
"""
import pytest

from rgn.data.synthetic import synth_generate
from rgn.evaluation.crossval import crossval
from rgn.schemas import HRgnConfig, SRgnConfig, TrainConfig

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def bench_data():
    return synth_generate(seed=1, n_families=400, d_raw=32)


@pytest.fixture(scope="module")
def bench_train_cfg():
    return TrainConfig(epochs=40, batch_size=32, lr=1e-3, eval_every=200, seed=0)


class TestSyntheticBenchmark:
    """Reasoning models separate kin from non-kin well above chance."""

    def test_srgn(self, bench_data, bench_train_cfg):
        manifest, table = bench_data
        report = crossval(manifest, table, "srgn", SRgnConfig(d=32, dims=[16, 4]), bench_train_cfg)
        assert report.mean >= 0.90

    def test_hrgn(self, bench_data, bench_train_cfg):
        manifest, table = bench_data
        report = crossval(manifest, table, "hrgn", HRgnConfig(d=32, latent=[8, 4], dims=[16, 4]), bench_train_cfg)
        assert report.mean >= 0.90

    def test_cosine_baseline(self, bench_data):
        manifest, table = bench_data
        assert crossval(manifest, table, "cos-baseline").roc.auc > 0.7
