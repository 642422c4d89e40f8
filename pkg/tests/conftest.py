import numpy as np
import pytest

from partwise.config import merge_config, default_config
from partwise.detector import train_from_images
from partwise.synthetic import default_product_spec, gen_product_dataset

# Small, fast pipeline settings shared by the integration-level tests: a 128px
# working resolution keeps CRF and segmentation cheap while leaving components
# large enough for the fixed 11x11 noise filter.
FAST_OVERRIDES = {
    "pipeline.input_size": 128,
    "features.coreset_ratio": 0.05,
}


def fast_config(**extra):
    overrides = dict(FAST_OVERRIDES)
    overrides.update(extra)
    return merge_config(default_config(), overrides)


@pytest.fixture(scope="session")
def product_data():
    spec = default_product_spec(256)
    train, test = gen_product_dataset(
        spec,
        n_normal=20,
        n_test_normal=10,
        defects={"missing": 6, "extra": 6, "color_swap": 6},
        seed=11,
    )
    return spec, train, test


@pytest.fixture(scope="session")
def trained_model(product_data):
    _spec, train, _test = product_data
    images = [s.image for s in train]
    ids = [f"train/good/{s.index:04d}.png" for s in train]
    return train_from_images(images, ids, fast_config())


def rng(seed=0):
    return np.random.default_rng(seed)
