"""
Dataset loading for a run: MNIST from IDX files or synthetic blobs, with the
configured normalization and size limits applied.
"""

from dataclasses import replace
from pathlib import Path

import numpy as np

from config.models import DataConfig
from config.modes import DatasetKind
from config.settings import MNIST_MEAN, MNIST_STD
from data_loader.dataset import Dataset
from data_loader.idx import load_mnist_idx
from data_loader.synthetic import synth_blobs
from tensor.rng import SeededRng
from utils.exceptions import ConfigError
from utils.logger import get_logger

logger = get_logger("DATA_LOADER")

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _find(directory: Path, stem: str) -> Path:
    for candidate in (directory / stem, directory / f"{stem}.gz"):
        if candidate.is_file():
            return candidate
    raise ConfigError(f"MNIST file {stem}[.gz] not found in {directory}")


def mnist_paths(directory) -> dict:
    """Split -> (images path, labels path); raises ConfigError when a file is missing"""
    directory = Path(directory)
    return {split: (_find(directory, images), _find(directory, labels))
            for split, (images, labels) in MNIST_FILES.items()}


class DatasetLoader:
    """Build the train and test sets a run configuration asks for"""

    def __init__(self, cfg: DataConfig, dtype=np.float32):
        self.cfg = cfg
        self.dtype = dtype

    def check_paths(self):
        if self.cfg.kind == DatasetKind.MNIST:
            mnist_paths(self.cfg.mnist_dir)

    def load(self) -> tuple:
        cfg = self.cfg
        if cfg.kind == DatasetKind.MNIST:
            paths = mnist_paths(cfg.mnist_dir)
            train = load_mnist_idx(*paths["train"], split="train", dtype=self.dtype)
            test = load_mnist_idx(*paths["test"], split="test", dtype=self.dtype)
            mean, std = cfg.mean or MNIST_MEAN, cfg.std or MNIST_STD
        else:
            rng = SeededRng(cfg.seed)
            train = synth_blobs(rng.child(0), cfg.n_per_class, cfg.num_classes, cfg.dim, cfg.separation,
                                cfg.cluster_std, split="train", dtype=self.dtype)
            test = synth_blobs(rng.child(1), cfg.test_per_class, cfg.num_classes, cfg.dim, cfg.separation,
                               cfg.cluster_std, split="test", dtype=self.dtype)
            mean, std = cfg.mean or (0.0,), cfg.std or (1.0,)

        clip = tuple(cfg.clip)
        train = replace(train.head(cfg.train_limit).with_normalization(mean, std), clip=clip)
        test = replace(test.head(cfg.test_limit).with_normalization(mean, std), clip=clip)
        self.summary(train, test)
        return train, test

    @staticmethod
    def summary(train: Dataset, test: Dataset):
        logger.info(
            f"Datasets ready | train: {len(train)} x {train.input_shape} | test: {len(test)} | "
            f"K={train.num_classes} | mean={train.mean} std={train.std}"
        )
