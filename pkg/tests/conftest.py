import numpy as np
import pytest

from gcnbounds import CsbmParams, TrainConfig, build_filter, gen_csbm
from gcnbounds.graphs import Graph


def svd_norm(m) -> float:
    """Independent dense SVD oracle for the largest singular value."""
    return float(np.linalg.svd(np.asarray(m, dtype=np.float64), compute_uv=False)[0])


@pytest.fixture
def triangle():
    return Graph(3, ((0, 1), (1, 2), (0, 2)))


@pytest.fixture
def small_dataset():
    return gen_csbm(CsbmParams(num_nodes=40, feature_dim=4, p_in=0.2, p_out=0.05,
                               train_fraction=0.3, noise_scale=0.5), seed=7)


@pytest.fixture
def small_filter(small_dataset):
    return build_filter(small_dataset.graph, "sym_selfloop")


@pytest.fixture
def quick_config():
    return TrainConfig(lr=0.05, steps=20, loss="squared", seed=5, record_every=1,
                       hidden_widths=(4,), activation="tanh")
