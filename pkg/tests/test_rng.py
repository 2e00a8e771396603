import math

import numpy as np
import pytest

from tensor.rng import SeededRng, sample_gaussian, sample_uniform
from utils.exceptions import ArgumentError


def test_same_seed_same_stream():
    a = sample_gaussian(SeededRng(42), (100,))
    b = sample_gaussian(SeededRng(42), (100,))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_gaussian(SeededRng(43), (100,)))


def test_child_streams_are_keyed_and_do_not_consume_parent():
    parent = SeededRng(9)
    first = sample_uniform(parent.child(1), (10,), 0, 1)
    again = sample_uniform(SeededRng(9).child(1), (10,), 0, 1)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, sample_uniform(parent.child(2), (10,), 0, 1))

    untouched = sample_uniform(SeededRng(9), (10,), 0, 1)
    assert np.array_equal(sample_uniform(parent, (10,), 0, 1), untouched)


def test_nested_children_differ_from_flat_keys():
    assert not np.array_equal(SeededRng(1).child(1, 2).permutation(50),
                              SeededRng(1).child(2, 1).permutation(50))


def test_gaussian_abs_mean():
    w = sample_gaussian(SeededRng(0), (1_000_000,))
    assert abs(np.mean(np.abs(w)) - math.sqrt(2 / math.pi)) / math.sqrt(2 / math.pi) < 0.01


def test_uniform_range_and_dtype():
    u = sample_uniform(SeededRng(0), (1000,), -0.5, 0.25, dtype=np.float32)
    assert u.dtype == np.float32
    assert u.min() >= -0.5 and u.max() <= 0.25


@pytest.mark.parametrize("call", [
    lambda: SeededRng(-1),
    lambda: sample_gaussian(SeededRng(0), (3,), std=-1.0),
    lambda: sample_uniform(SeededRng(0), (3,), 1.0, 0.0),
])
def test_invalid_arguments(call):
    with pytest.raises(ArgumentError):
        call()
