import numpy as np
import pytest

from latentswap.config import ModelConfig, TrainConfig
from latentswap.model import ModelParams
from latentswap.synth import SyntheticSpec, generate_synthetic


@pytest.fixture(scope="session")
def tiny_config():
    return ModelConfig(n_attributes=2, image_size=32, depth=3, base_channels=4,
                       latent_channels=16)


@pytest.fixture(scope="session")
def tiny_model(tiny_config):
    return ModelParams(tiny_config, seed=11)


@pytest.fixture(scope="session")
def perturbed_model(tiny_config):
    """Like tiny_model but with the zero-initialized layers randomized, so
    residuals and scores are non-trivial."""
    model = ModelParams(tiny_config, seed=12)
    rng = np.random.default_rng(99)
    for p in model.all_parameters():
        p.data = p.data + rng.normal(0, 0.05, p.data.shape).astype(p.data.dtype)
    return model


@pytest.fixture(scope="session")
def tiny_synth():
    spec = SyntheticSpec(image_size=32, attribute_names=("bangs", "smile"), seed=21)
    dataset, oracle = generate_synthetic(spec, 80)
    return spec, dataset, oracle


@pytest.fixture()
def tiny_train_config():
    return TrainConfig(batch_size=4, total_steps=6, seed=5, checkpoint_interval=3)


def random_image(rng, size=32):
    return np.clip(rng.normal(0, 0.4, (size, size, 3)), -0.95, 0.95).astype(np.float32)
