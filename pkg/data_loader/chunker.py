from math import ceil

import numpy as np

from data_loader.dataset import Dataset
from tensor.rng import SeededRng
from utils.exceptions import ArgumentError
from utils.logger import get_logger

logger = get_logger("CHUNKER")


def batch_indices(n: int, batch_size: int, shuffle: bool = False, rng: SeededRng | None = None,
                  epoch: int = 0) -> list:
    """
    Split range(n) into batches of ``batch_size``; the last batch keeps the
    remainder. With ``shuffle`` the order is a permutation drawn from
    ``rng.child(epoch)``, so it differs per epoch and repeats per seed.
    """
    if batch_size <= 0:
        raise ArgumentError(f"batch_size must be > 0, got {batch_size}")

    order = np.arange(n)
    if shuffle:
        if rng is None:
            raise ArgumentError("shuffle needs an rng")
        order = rng.child(epoch).permutation(n)

    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def batch_iter(ds: Dataset, batch_size: int, shuffle: bool = False, rng: SeededRng | None = None,
               epoch: int = 0):
    batches = batch_indices(len(ds), batch_size, shuffle, rng, epoch)
    logger.debug(f"Splitting {len(ds)} examples into {ceil(len(ds) / batch_size)} batches of size {batch_size}")
    for indices in batches:
        yield ds.take(indices)
