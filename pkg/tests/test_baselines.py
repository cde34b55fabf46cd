"""Tests for the comparator baselines, the feature extractors and the model registry."""
import numpy as np
import pytest

from rgn.data.sampling import PairBatch
from rgn.engine import ParameterStore, Tape, backward, build_optimizer
from rgn.errors import ConfigError, DimensionError
from rgn.models.baselines import MlpBaseline, cos_baseline
from rgn.models.extractors import PrecomputedExtractor, ToyExtractor, build_extractor
from rgn.models.hrgn import HRGN
from rgn.models.registry import make_model
from rgn.models.srgn import SRGN
from rgn.schemas import MlpBaselineConfig, SRgnConfig


class TestCosBaseline:
    """Cosine similarity scores."""

    def test_identical(self):
        assert cos_baseline([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])[0] == pytest.approx(1.0, abs=1e-15)

    def test_orthogonal(self):
        assert cos_baseline([1.0, 0.0], [0.0, 3.0])[0] == 0.0

    def test_opposite(self):
        assert cos_baseline([1.0, -2.0], [-1.0, 2.0])[0] == pytest.approx(-1.0, abs=1e-15)

    def test_scale_invariant(self, rng):
        a, b = rng.standard_normal((5, 7)), rng.standard_normal((5, 7))
        np.testing.assert_allclose(cos_baseline(2.5 * a, b), cos_baseline(a, b), atol=1e-12, rtol=0)

    def test_batch_shape(self, rng):
        assert cos_baseline(rng.standard_normal((4, 3)), rng.standard_normal((4, 3))).shape == (4,)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            cos_baseline([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_bi_subject_only(self):
        with pytest.raises(ConfigError):
            cos_baseline([1.0], [1.0], [1.0])


class TestMlpBaseline:
    """Concatenation + MLP comparator."""

    def test_default_architecture(self):
        model = MlpBaseline(MlpBaselineConfig(d=16), seed=0)
        assert model.store.shapes() == {
            "mlpbase.mlp.0.weight": (32, 64),
            "mlpbase.mlp.0.bias": (64,),
            "mlpbase.mlp.1.weight": (64, 1),
            "mlpbase.mlp.1.bias": (1,),
        }

    def test_tri_subject_input_width(self):
        model = MlpBaseline(MlpBaselineConfig(d=4, subject_count=3, hidden=[5]), seed=0)
        assert model.store["mlpbase.mlp.0.weight"].shape == (12, 5)

    def test_zero_parameters_give_half(self, rng):
        model = MlpBaseline(MlpBaselineConfig(d=4, hidden=[3], init="zeros"), seed=0)
        batch = PairBatch(parent=rng.standard_normal((2, 4)), child=rng.standard_normal((2, 4)), labels=np.ones(2))
        np.testing.assert_array_equal(model.predict_proba(batch), [0.5, 0.5])

    def test_dimension_mismatch(self, rng):
        model = MlpBaseline(MlpBaselineConfig(d=4, hidden=[3]), seed=0)
        with pytest.raises(DimensionError):
            model.forward(rng.standard_normal(5), rng.standard_normal(5))

    def test_fits_separable_task(self):
        rng = np.random.default_rng(2)
        parents = rng.standard_normal((64, 6))
        kin = np.arange(64) < 32
        children = np.where(kin[:, None], parents, rng.standard_normal((64, 6)))
        batch = PairBatch(parent=parents, child=children, labels=kin.astype(np.float64))
        model = MlpBaseline(MlpBaselineConfig(d=6, hidden=[32]), seed=0)
        optimizer = build_optimizer("adam", model.store, lr=1e-2)
        for _ in range(400):
            with Tape():
                loss = model.loss(batch)
            backward(loss, model.store)
            optimizer.step()
        accuracy = np.mean((model.predict_proba(batch) >= 0.5) == kin)
        assert accuracy >= 0.9


class TestExtractors:
    """Precomputed and toy-trainable feature extractors."""

    def test_precomputed_is_identity(self, rng):
        x = rng.standard_normal((3, 4))
        np.testing.assert_array_equal(PrecomputedExtractor(4)(x).data, x)

    def test_precomputed_width_checked(self, rng):
        with pytest.raises(DimensionError):
            PrecomputedExtractor(4)(rng.standard_normal((3, 5)))

    def test_toy_output_width_and_range(self, rng):
        extractor = ToyExtractor(ParameterStore(), d_raw=7, d=3, seed=0)
        out = extractor(rng.standard_normal((5, 7))).data
        assert out.shape == (5, 3)
        assert np.all(np.abs(out) < 1.0)

    def test_build_precomputed_needs_matching_width(self):
        with pytest.raises(ConfigError):
            build_extractor("precomputed", ParameterStore(), d_raw=32, d=16)

    def test_build_toy_registers_parameters(self):
        store = ParameterStore()
        build_extractor("toy-trainable", store, d_raw=32, d=16)
        assert store.shapes() == {"extractor.linear.weight": (32, 16), "extractor.linear.bias": (16,)}

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            build_extractor("resnet", ParameterStore(), d_raw=4, d=4)


class TestRegistry:
    """make_model."""

    def test_kinds(self):
        assert isinstance(make_model("srgn", {"d": 4, "k": 1, "dims": [2]}), SRGN)
        assert isinstance(make_model("hrgn", {"d": 4, "latent": [2], "k": 1, "dims": [2]}), HRGN)
        assert isinstance(make_model("mlp-baseline", {"d": 4}), MlpBaseline)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            make_model("cos-baseline")

    def test_wrong_config_type(self):
        with pytest.raises(ConfigError):
            make_model("hrgn", SRgnConfig(d=4, k=1, dims=[2]))

    def test_invalid_overrides(self):
        with pytest.raises(ConfigError, match="k=2"):
            make_model("srgn", {"d": 4, "k": 2, "dims": [2]})

    def test_increasing_widths_override(self):
        with pytest.raises(ConfigError, match="HRgnConfig"):
            make_model("hrgn", {"d": 8, "latent": [16]})

    def test_shared_store(self):
        store = ParameterStore()
        make_model("srgn", {"d": 4, "k": 1, "dims": [2]}, store=store)
        ToyExtractor(store, d_raw=5, d=4)
        assert "srgn.layer1.w_mess" in store and "extractor.linear.weight" in store
