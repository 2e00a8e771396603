import numpy as np
import pytest

from data_loader.synthetic import synth_blobs
from net.init import initialize
from net.layers import ArchConfig
from net.network import build
from tensor.rng import SeededRng


def make_mlp(widths=(16, 16), input_dim=6, num_classes=3, full_bn=False, scheme="ibp", seed=0,
             dtype=np.float64):
    arch = ArchConfig(
        input_shape=(1, 1, input_dim),
        num_classes=num_classes,
        preset="mlp",
        preset_args={"widths": list(widths)},
        full_bn=full_bn,
    )
    return initialize(build(arch, dtype=dtype), scheme, SeededRng(seed))


@pytest.fixture
def mlp_factory():
    return make_mlp


@pytest.fixture
def tiny_net():
    """3 affine layers with BN after each hidden one, float64"""
    return make_mlp(widths=(8, 8), full_bn=True)


@pytest.fixture
def blobs():
    return synth_blobs(SeededRng(7), n_per_class=10, num_classes=3, dim=6, separation=0.3,
                       dtype=np.float64)


@pytest.fixture
def batch(blobs):
    return blobs.take(SeededRng(3).permutation(len(blobs))[:8])


def blobs_run_config(out_dir, **sections) -> dict:
    """Small float64 blobs run, two epochs (0 + 1 + 1)"""
    document = {
        "arch": {"input_shape": [1, 1, 6], "num_classes": 3, "preset": "mlp",
                 "preset_args": {"widths": [12, 12]}, "full_bn": True},
        "train": {"epochs": 2, "batch_size": 16, "lr": 0.005, "dtype": "float64", "seed": 5},
        "sched": {"eps_target": 0.05, "eps_train": 0.05, "start_epochs": 0, "increase_epochs": 1,
                  "final_epochs": 1},
        "data": {"kind": "blobs", "num_classes": 3, "dim": 6, "n_per_class": 20, "test_per_class": 10},
        "output": {"dir": str(out_dir)},
        "eval": {"eps_list": [0.0, 0.05], "batch_size": 50},
    }
    for name, values in sections.items():
        document.setdefault(name, {}).update(values)
    return document


@pytest.fixture
def run_document():
    return blobs_run_config
