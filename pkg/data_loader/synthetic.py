import math

import numpy as np

from data_loader.dataset import Dataset
from tensor.rng import SeededRng, sample_gaussian
from utils.exceptions import ArgumentError


def blob_centers(num_classes: int, dim: int, separation: float) -> np.ndarray:
    """
    Class k sits at 0.5 + (separation/2)·(cos θₖ, sin θₖ, 0, ...), θₖ = 2πk/K,
    the vertices of a regular polygon. With dim = 1 the centers are evenly
    spaced on a segment of length ``separation``.
    """
    centers = np.full((num_classes, dim), 0.5)
    if dim == 1:
        centers[:, 0] += separation * (np.arange(num_classes) / (num_classes - 1) - 0.5)
        return centers
    theta = 2 * math.pi * np.arange(num_classes) / num_classes
    centers[:, 0] += separation / 2 * np.cos(theta)
    centers[:, 1] += separation / 2 * np.sin(theta)
    return centers


def synth_blobs(rng: SeededRng, n_per_class: int, num_classes: int, dim: int, separation: float,
                cluster_std: float = 0.03, split: str = "train", dtype=np.float32) -> Dataset:
    """Gaussian clusters around fixed centers, clipped to [0, 1]^dim, shaped (N, 1, 1, dim)"""
    if separation <= 0:
        raise ArgumentError(f"separation must be > 0, got {separation}")
    if num_classes < 2 or n_per_class < 1 or dim < 1:
        raise ArgumentError(f"need K >= 2, n_per_class >= 1, dim >= 1; got {num_classes}, {n_per_class}, {dim}")

    centers = blob_centers(num_classes, dim, separation)
    noise = sample_gaussian(rng, (num_classes, n_per_class, dim), 0.0, cluster_std)
    points = np.clip(centers[:, None, :] + noise, 0.0, 1.0).reshape(-1, dim)
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), n_per_class)

    return Dataset(
        images=points.reshape(-1, 1, 1, dim).astype(dtype),
        labels=labels,
        num_classes=num_classes,
        split=split,
        meta={"kind": "blobs", "seed": rng.seed, "keys": list(rng.keys), "separation": separation,
              "cluster_std": cluster_std},
    )
