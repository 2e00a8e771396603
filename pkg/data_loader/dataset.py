from dataclasses import dataclass, field, replace

import numpy as np

from config.settings import CLIP_RANGE
from utils.exceptions import ArgumentError, DimensionError


@dataclass(frozen=True)
class Dataset:
    """
    Images in [clip] with shape (N, C, H, W) and integer labels in [0, K).

    Normalization constants travel with the data but are only applied inside
    the input interval; stored pixels stay raw.
    """
    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"
    mean: tuple = (0.0,)
    std: tuple = (1.0,)
    clip: tuple = CLIP_RANGE
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.images.ndim != 4:
            raise DimensionError(f"images must be N x C x H x W, got {self.images.shape}")
        if self.images.shape[0] != self.labels.shape[0]:
            raise DimensionError(f"{self.images.shape[0]} images but {self.labels.shape[0]} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ArgumentError(f"labels must lie in [0, {self.num_classes})")
        lo, hi = self.clip
        if self.images.size and (self.images.min() < lo or self.images.max() > hi):
            raise ArgumentError(f"pixel values must lie in [{lo}, {hi}]")

    def __len__(self):
        return int(self.images.shape[0])

    @property
    def input_shape(self) -> tuple:
        return tuple(self.images.shape[1:])

    def take(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return replace(self, images=self.images[indices], labels=self.labels[indices])

    def head(self, n: int | None) -> "Dataset":
        if n is None or n >= len(self):
            return self
        return self.take(np.arange(n))

    def astype(self, dtype) -> "Dataset":
        return replace(self, images=self.images.astype(dtype))

    def with_normalization(self, mean, std) -> "Dataset":
        return replace(self, mean=tuple(float(m) for m in mean), std=tuple(float(s) for s in std))
