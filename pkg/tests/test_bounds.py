import itertools

import numpy as np
import pytest

from autograd.engine import Variable
from config.modes import BNMode
from ibp.bounds import (
    IntervalBounds,
    input_interval,
    interval_affine,
    interval_bn,
    interval_conv,
    interval_relu,
    normalize_input,
)
from tensor import ops
from utils.exceptions import ArgumentError, ContractError, DimensionError


def random_box(gen, shape, scale=1.0):
    center = gen.standard_normal(shape)
    radius = np.abs(gen.standard_normal(shape)) * scale
    return IntervalBounds(Variable(center - radius), Variable(center + radius))


@pytest.mark.parametrize("seed", range(20))
def test_affine_matches_corner_enumeration(seed):
    gen = np.random.default_rng(seed)
    n_in = int(gen.integers(1, 7))
    W, b = gen.standard_normal((4, n_in)), gen.standard_normal(4)
    box = random_box(gen, (1, n_in))
    out = interval_affine(W, b, box)

    lo, hi = box.lower.data[0], box.upper.data[0]
    corners = np.array([np.where(mask, hi, lo) for mask in itertools.product([False, True], repeat=n_in)])
    values = corners @ W.T + b
    assert np.allclose(out.lower.data[0], values.min(axis=0), rtol=0, atol=1e-12)
    assert np.allclose(out.upper.data[0], values.max(axis=0), rtol=0, atol=1e-12)


def test_affine_is_sound_for_interior_points():
    gen = np.random.default_rng(0)
    W, b = gen.standard_normal((5, 8)), gen.standard_normal(5)
    box = random_box(gen, (3, 8))
    out = interval_affine(W, b, box)
    for _ in range(200):
        t = gen.uniform(size=(3, 8))
        x = box.lower.data + t * (box.upper.data - box.lower.data)
        assert out.contains(x @ W.T + b, tol=1e-12)


def test_conv_matches_unrolled_affine():
    gen = np.random.default_rng(1)
    kernel, bias = gen.standard_normal((2, 2, 3, 3)), gen.standard_normal(2)
    box = random_box(gen, (1, 2, 4, 4))
    out = interval_conv(kernel, bias, 1, 1, box)

    basis = np.eye(32).reshape(32, 2, 4, 4)
    columns = ops.conv2d(basis, kernel, None, 1, 1).reshape(32, -1)
    W = columns.T
    b = np.repeat(bias, 16)
    flat = interval_affine(W, b, box.reshape((1, 32)))
    assert np.allclose(out.lower.data.reshape(1, -1), flat.lower.data, atol=1e-12)
    assert np.allclose(out.upper.data.reshape(1, -1), flat.upper.data, atol=1e-12)


def test_relu_bounds():
    box = IntervalBounds(Variable(np.array([[-2.0, -1.0, 0.5]])), Variable(np.array([[-1.0, 3.0, 2.0]])))
    out = interval_relu(box)
    assert np.array_equal(out.lower.data, [[0.0, 0.0, 0.5]])
    assert np.array_equal(out.upper.data, [[0.0, 3.0, 2.0]])


def test_input_interval_clips_then_normalizes():
    x = np.array([[[[0.02, 0.5, 0.97]]]])
    box = input_interval(x, 0.1, clip=(0.0, 1.0), mean=0.5, std=0.25)
    assert np.allclose(box.lower.data, (np.array([0.0, 0.4, 0.87]) - 0.5) / 0.25)
    assert np.allclose(box.upper.data, (np.array([0.12, 0.6, 1.0]) - 0.5) / 0.25)
    assert np.allclose(normalize_input(x, 0.5, 0.25), (x - 0.5) / 0.25)

    zero = input_interval(x, 0.0)
    assert np.array_equal(zero.lower.data, zero.upper.data)
    with pytest.raises(ArgumentError):
        input_interval(x, -0.1)


def test_input_interval_per_channel_constants():
    x = np.full((2, 3, 2, 2), 0.5)
    box = input_interval(x, 0.0, mean=(0.1, 0.2, 0.3), std=(1.0, 2.0, 4.0))
    assert np.allclose(box.lower.data[:, 1], 0.15)
    with pytest.raises(DimensionError):
        input_interval(x, 0.0, mean=(0.1, 0.2))


def test_disordered_input_is_a_contract_error():
    box = IntervalBounds(Variable(np.array([[1.0, 0.0]])), Variable(np.array([[0.0, 1.0]])))
    with pytest.raises(ContractError):
        interval_affine(np.eye(2), np.zeros(2), box)


def test_bn_with_unit_statistics_is_identity():
    gen = np.random.default_rng(2)
    box = random_box(gen, (4, 3))
    clean = Variable(box.lower.data)
    out, clean_out, _ = interval_bn(box, clean, np.ones(3), np.zeros(3), BNMode.EVAL,
                                    running_mean=np.zeros(3), running_var=np.ones(3), eps=1e-12)
    assert np.allclose(out.lower.data, box.lower.data)
    assert np.allclose(out.upper.data, box.upper.data)
    assert np.allclose(clean_out.data, clean.data)


def test_bn_negative_scale_swaps_and_stays_sound():
    gen = np.random.default_rng(3)
    box = random_box(gen, (6, 2, 3, 3))
    clean_values = box.lower.data + 0.5 * box.width.data
    gamma, beta = np.array([-1.5, 2.0]), np.array([0.3, -0.1])
    out, _, stats = interval_bn(box, Variable(clean_values), gamma, beta, BNMode.TRAIN,
                                running_mean=np.zeros(2), running_var=np.ones(2))
    out.check_ordered("bn")

    scale = gamma / np.sqrt(stats.var + 1e-5)
    shift = beta - scale * stats.mean
    for _ in range(50):
        t = gen.uniform(size=box.shape)
        x = box.lower.data + t * box.width.data
        y = x * scale.reshape(1, 2, 1, 1) + shift.reshape(1, 2, 1, 1)
        assert out.contains(y, tol=1e-12)


def test_bn_train_statistics_and_running_update():
    gen = np.random.default_rng(4)
    clean = gen.standard_normal((16, 3)) * 2 + 1
    box = IntervalBounds(Variable(clean - 0.1), Variable(clean + 0.1))
    run_mean, run_var = np.full(3, 0.5), np.full(3, 2.0)
    _, clean_out, stats = interval_bn(box, Variable(clean), np.ones(3), np.zeros(3), BNMode.TRAIN,
                                      running_mean=run_mean, running_var=run_var, momentum=0.1)
    assert np.allclose(stats.mean, clean.mean(axis=0))
    assert np.allclose(stats.var, clean.var(axis=0))
    assert np.allclose(stats.running_mean, 0.9 * run_mean + 0.1 * clean.mean(axis=0))
    assert np.allclose(stats.running_var, 0.9 * run_var + 0.1 * clean.var(axis=0))
    assert np.allclose(clean_out.data.mean(axis=0), 0, atol=1e-12)
    assert np.array_equal(run_mean, np.full(3, 0.5))


@pytest.mark.parametrize("center, scale", [(False, False), (True, False), (False, True)])
def test_bn_ablation_variants(center, scale):
    gen = np.random.default_rng(5)
    clean = gen.standard_normal((8, 2)) + 3
    box = IntervalBounds(Variable(clean - 0.2), Variable(clean + 0.2))
    gamma, beta = np.array([2.0, 0.5]), np.array([0.1, -0.2])
    out, clean_out, stats = interval_bn(box, Variable(clean), gamma, beta, BNMode.TRAIN,
                                        running_mean=np.zeros(2), running_var=np.ones(2),
                                        center=center, scale=scale)
    s = gamma / np.sqrt(stats.var + 1e-5) if scale else gamma
    shift = beta - s * stats.mean if center else beta
    assert np.allclose(clean_out.data, clean * s + shift)
    assert np.allclose(out.width.data, 0.4 * np.abs(s) * np.ones_like(clean))


def test_bn_rejects_nonpositive_eps():
    box = random_box(np.random.default_rng(6), (2, 2))
    with pytest.raises(ArgumentError):
        interval_bn(box, box.lower, np.ones(2), np.zeros(2), BNMode.EVAL,
                    running_mean=np.zeros(2), running_var=np.ones(2), eps=0.0)
