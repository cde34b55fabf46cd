"""Default hyper-parameters of every config object."""
from rgn.schemas import (
    LATENT_PRESETS,
    ExperimentConfig,
    HRgnConfig,
    MlpBaselineConfig,
    SRgnConfig,
    TrainConfig,
)


class TestDefaults:
    def test_srgn(self):
        cfg = SRgnConfig()
        assert (cfg.d, cfg.k, cfg.dims) == (512, 2, [512, 4])
        assert (cfg.init_pool, cfg.aggre_pool) == ("avg", "max")
        assert cfg.head_hidden == [] and not cfg.untie_central_message

    def test_hrgn(self):
        cfg = HRgnConfig()
        assert (cfg.d, cfg.k, cfg.dims) == (512, 2, [512, 4])
        assert cfg.aggre_pool == "avg"
        assert cfg.init_mode == "self-attention"
        assert cfg.lower_input_mode == "comprehensive"
        assert cfg.latent == [128, 16]

    def test_presets(self):
        assert LATENT_PRESETS == {"L1": (32,), "L2": (128, 16), "L3": (128, 32, 8), "L4": (128, 32, 8, 2)}
        assert HRgnConfig(latent="L4").layer_cfg.node_counts == [512, 128, 32, 8, 2]

    def test_mlp_baseline(self):
        assert MlpBaselineConfig().hidden == [64]

    def test_train(self):
        cfg = TrainConfig()
        assert (cfg.optimizer, cfg.lr, cfg.betas, cfg.eps) == ("adam", 1e-3, (0.9, 0.999), 1e-8)
        assert cfg.extractor == "precomputed" and not cfg.resample_negatives

    def test_experiment_sections(self):
        cfg = ExperimentConfig()
        assert cfg.model_config_for("srgn") == SRgnConfig()
        assert cfg.model_config_for("cos-baseline") is None
