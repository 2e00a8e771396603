"""
IDX reader for the MNIST files.

Layout (big-endian):

    images: int32 magic 2051 | int32 count | int32 rows | int32 cols | uint8 pixels
    labels: int32 magic 2049 | int32 count | uint8 labels

Files ending in ``.gz`` are decompressed transparently.
"""

import gzip
import struct
from pathlib import Path

import numpy as np

from config.settings import MNIST_MEAN, MNIST_NUM_CLASSES, MNIST_STD
from data_loader.dataset import Dataset
from utils.exceptions import ParseError
from utils.logger import get_logger

logger = get_logger("IDX")

MNIST_IMAGE_MAGIC = 2051
MNIST_LABEL_MAGIC = 2049


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def _header(raw: bytes, count: int, path) -> tuple:
    size = 4 * count
    if len(raw) < size:
        raise ParseError(f"{path}: header needs {size} bytes, file has {len(raw)}", offset=len(raw))
    return struct.unpack(f">{count}I", raw[:size])


def read_idx_images(path) -> np.ndarray:
    raw = _read_bytes(path)
    magic, count, rows, cols = _header(raw, 4, path)
    if magic != MNIST_IMAGE_MAGIC:
        raise ParseError(f"{path}: image magic {magic:#010x}, expected {MNIST_IMAGE_MAGIC:#010x}", offset=0)

    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise ParseError(f"{path}: truncated pixel data, expected {expected} bytes", offset=len(raw))
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, 1, rows, cols)


def read_idx_labels(path, num_classes: int = MNIST_NUM_CLASSES) -> np.ndarray:
    raw = _read_bytes(path)
    magic, count = _header(raw, 2, path)
    if magic != MNIST_LABEL_MAGIC:
        raise ParseError(f"{path}: label magic {magic:#010x}, expected {MNIST_LABEL_MAGIC:#010x}", offset=0)

    if len(raw) < 8 + count:
        raise ParseError(f"{path}: truncated label data, expected {8 + count} bytes", offset=len(raw))
    labels = np.frombuffer(raw, dtype=np.uint8, count=count, offset=8)

    bad = np.flatnonzero(labels >= num_classes)
    if bad.size:
        raise ParseError(f"{path}: label {labels[bad[0]]} outside [0, {num_classes})", offset=8 + int(bad[0]))
    return labels.astype(np.int64)


def load_mnist_idx(images_path, labels_path, split: str = "train", dtype=np.float32,
                   mean=MNIST_MEAN, std=MNIST_STD) -> Dataset:
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ParseError(f"{images.shape[0]} images but {labels.shape[0]} labels in {labels_path}", offset=4)

    logger.info(f"Loaded {images.shape[0]} {split} images of {images.shape[2]}x{images.shape[3]} from {images_path}")
    return Dataset(
        images=(images.astype(dtype) / 255.0).astype(dtype),
        labels=labels,
        num_classes=MNIST_NUM_CLASSES,
        split=split,
        mean=tuple(mean),
        std=tuple(std),
    )
