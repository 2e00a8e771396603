"""
Weight initialization schemes and the difference-gain audit.

The difference gain of an affine layer with fan-in n is (n/2)·E|W|: the
expected factor by which the mean bound width grows across one affine+ReLU
stage. The IBP scheme samples W ~ N(0, (√(2π)/n)²), which makes that factor 1.
"""

import math
from dataclasses import replace

import numpy as np

from config.modes import InitScheme, LayerKind
from net.network import Network
from tensor.rng import SeededRng, sample_gaussian, sample_uniform
from utils.exceptions import ArgumentError
from utils.logger import get_logger

logger = get_logger("INIT")


def _scheme(scheme) -> InitScheme:
    try:
        return InitScheme(scheme)
    except ValueError as e:
        raise ArgumentError(
            f"Unknown init scheme '{scheme}', expected one of {[s.value for s in InitScheme]}"
        ) from e


def ibp_std(n_i: int) -> float:
    return math.sqrt(2 * math.pi) / n_i


def sample_weights(scheme, shape, n_i: int, rng: SeededRng) -> np.ndarray:
    """Float64 sample of a weight tensor of the given shape under ``scheme``"""
    scheme = _scheme(scheme)
    if n_i < 1:
        raise ArgumentError(f"fan-in must be >= 1, got {n_i}")

    if scheme == InitScheme.IBP:
        return sample_gaussian(rng, shape, 0.0, ibp_std(n_i))
    if scheme == InitScheme.XAVIER_UNIFORM:
        bound = 1.0 / math.sqrt(n_i)
        return sample_uniform(rng, shape, -bound, bound)
    if scheme == InitScheme.XAVIER_GAUSSIAN:
        return sample_gaussian(rng, shape, 0.0, math.sqrt(1.0 / n_i))
    if scheme == InitScheme.KAIMING_UNIFORM:
        bound = math.sqrt(6.0 / n_i)
        return sample_uniform(rng, shape, -bound, bound)
    return sample_gaussian(rng, shape, 0.0, math.sqrt(2.0 / n_i))


def initialize(net: Network, scheme, rng: SeededRng) -> Network:
    scheme = _scheme(scheme)
    params = {}
    buffers = {}

    for layer in net.layers:
        i = layer.index
        if layer.is_affine:
            shape = net.params[f"{i}.weight"].shape
            weight = sample_weights(scheme, shape, layer.fan_in, rng.child(i))
            params[f"{i}.weight"] = weight.astype(net.dtype)
            params[f"{i}.bias"] = np.zeros(shape[0], dtype=net.dtype)
        elif layer.kind == LayerKind.BATCHNORM:
            channels = net.params[f"{i}.gamma"].shape[0]
            params[f"{i}.gamma"] = np.ones(channels, dtype=net.dtype)
            params[f"{i}.beta"] = np.zeros(channels, dtype=net.dtype)
            buffers[f"{i}.running_mean"] = np.zeros(channels, dtype=net.dtype)
            buffers[f"{i}.running_var"] = np.ones(channels, dtype=net.dtype)

    logger.info(f"Initialized {len(net.affine_layers)} affine layers with scheme={scheme.value}")
    return replace(net, params=params, buffers=buffers, calibrated=False)


# -------------------------
# Difference gain
# -------------------------

def difference_gain_empirical(W: np.ndarray, n_i: int) -> float:
    W = np.asarray(W)
    if W.size == 0:
        raise ArgumentError("difference gain of an empty weight tensor")
    return float(n_i / 2.0 * np.mean(np.abs(W), dtype=np.float64))


def difference_gain_closed_form(scheme, n_i: int) -> float:
    scheme = _scheme(scheme)
    if scheme == InitScheme.IBP:
        return 1.0
    if scheme == InitScheme.XAVIER_UNIFORM:
        return math.sqrt(n_i) / 4.0
    if scheme == InitScheme.XAVIER_GAUSSIAN:
        return math.sqrt(n_i / (2 * math.pi))
    if scheme == InitScheme.KAIMING_UNIFORM:
        # empirical Kaiming-uniform gains follow √6/4·√n, not √3/4·√n
        return math.sqrt(6.0 * n_i) / 4.0
    return math.sqrt(n_i / math.pi)


def layer_gains(net: Network) -> list:
    """(layer tag, fan-in, empirical gain) for every affine layer"""
    return [
        (layer.tag, layer.fan_in, difference_gain_empirical(net.params[f"{layer.index}.weight"], layer.fan_in))
        for layer in net.affine_layers
    ]


# -------------------------
# Residual calibration
# -------------------------

def residual_calibrate(net: Network) -> Network:
    """Halve the weight of the first affine layer after every residual_add"""
    if net.calibrated:
        logger.warning("Residual calibration already applied, leaving weights unchanged")
        return net

    params = dict(net.params)
    pending = False
    halved = []
    for layer in net.layers:
        if layer.kind == LayerKind.RESIDUAL_ADD:
            pending = True
        elif layer.is_affine and pending:
            key = f"{layer.index}.weight"
            params[key] = (params[key] / 2).astype(net.dtype)
            halved.append(layer.tag)
            pending = False

    if not halved:
        return net

    logger.info(f"Residual calibration halved weights of {halved}")
    return replace(net, params=params, calibrated=True)
