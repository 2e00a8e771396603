"""
Interval transformers for each layer kind.

Every transformer takes and returns ``IntervalBounds`` whose endpoints are
``Variable`` nodes, so the same code serves the taped training objective and
plain evaluation. Affine maps use the sign split W = W₊ + W₋:

    lower' = W₊·lower + W₋·upper + b
    upper' = W₊·upper + W₋·lower + b
"""

from dataclasses import dataclass

import numpy as np

from autograd.engine import Variable, conv2d
from config.modes import BNMode
from utils.exceptions import ArgumentError, ContractError, DimensionError


def as_variable(value, dtype=None) -> Variable:
    if isinstance(value, Variable):
        return value
    return Variable(np.asarray(value, dtype=dtype))


@dataclass
class IntervalBounds:
    lower: Variable
    upper: Variable

    def __post_init__(self):
        self.lower = as_variable(self.lower)
        self.upper = as_variable(self.upper)
        if self.lower.shape != self.upper.shape:
            raise DimensionError(f"Interval endpoints differ in shape: {self.lower.shape} vs {self.upper.shape}")

    @property
    def shape(self):
        return self.lower.shape

    @property
    def width(self) -> Variable:
        return self.upper - self.lower

    def check_ordered(self, where: str):
        if np.any(self.lower.data > self.upper.data):
            worst = float(np.max(self.lower.data - self.upper.data))
            raise ContractError(f"{where}: lower bound exceeds upper bound by up to {worst}")

    def reshape(self, shape) -> "IntervalBounds":
        return IntervalBounds(self.lower.reshape(shape), self.upper.reshape(shape))

    def __add__(self, other: "IntervalBounds") -> "IntervalBounds":
        return IntervalBounds(self.lower + other.lower, self.upper + other.upper)

    def contains(self, values: np.ndarray, tol: float = 0.0) -> bool:
        values = np.asarray(values)
        return bool(np.all(values >= self.lower.data - tol) and np.all(values <= self.upper.data + tol))


def _channel_view(values, x: np.ndarray, dtype) -> np.ndarray:
    """Per-channel constants shaped to broadcast against an (N, C, ...) batch"""
    values = np.asarray(values, dtype=dtype).reshape(-1)
    channels = x.shape[1]
    if values.size == 1:
        values = np.repeat(values, channels)
    if values.size != channels:
        raise DimensionError(f"Expected {channels} per-channel values, got {values.size}")
    return values.reshape((1, channels) + (1,) * (x.ndim - 2))


def input_interval(x, eps: float, clip=(0.0, 1.0), mean=0.0, std=1.0) -> IntervalBounds:
    """
    Box of ℓ∞ radius ``eps`` around ``x``, clipped to the pixel range and
    then normalized per channel.
    """
    if eps < 0:
        raise ArgumentError(f"eps must be >= 0, got {eps}")
    x = np.asarray(x)
    lo, hi = clip
    mean = _channel_view(mean, x, x.dtype)
    std = _channel_view(std, x, x.dtype)
    lower = (np.maximum(x - eps, lo) - mean) / std
    upper = (np.minimum(x + eps, hi) - mean) / std
    return IntervalBounds(Variable(lower.astype(x.dtype)), Variable(upper.astype(x.dtype)))


def normalize_input(x, mean=0.0, std=1.0) -> np.ndarray:
    x = np.asarray(x)
    return ((x - _channel_view(mean, x, x.dtype)) / _channel_view(std, x, x.dtype)).astype(x.dtype)


def interval_affine(W, b, bounds: IntervalBounds) -> IntervalBounds:
    W, b = as_variable(W), as_variable(b)
    if bounds.lower.ndim != 2 or bounds.shape[1] != W.shape[1]:
        raise DimensionError(f"Dense bounds {bounds.shape} do not match weight {W.shape}")
    bounds.check_ordered("interval_affine input")

    w_pos, w_neg = W.relu().mT, W.neg_part().mT
    lower = bounds.lower @ w_pos + bounds.upper @ w_neg + b
    upper = bounds.upper @ w_pos + bounds.lower @ w_neg + b
    return IntervalBounds(lower, upper)


def interval_conv(kernel, bias, stride: int, padding: int, bounds: IntervalBounds) -> IntervalBounds:
    kernel, bias = as_variable(kernel), as_variable(bias)
    bounds.check_ordered("interval_conv input")

    k_pos, k_neg = kernel.relu(), kernel.neg_part()
    lower = conv2d(bounds.lower, k_pos, bias, stride, padding) + conv2d(bounds.upper, k_neg, None, stride, padding)
    upper = conv2d(bounds.upper, k_pos, bias, stride, padding) + conv2d(bounds.lower, k_neg, None, stride, padding)
    return IntervalBounds(lower, upper)


def interval_relu(bounds: IntervalBounds) -> IntervalBounds:
    return IntervalBounds(bounds.lower.relu(), bounds.upper.relu())


# -------------------------
# Batch normalization
# -------------------------

@dataclass
class BNStats:
    """Statistics used by one BN layer in one pass, plus the updated running averages"""
    mean: np.ndarray
    var: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray


def _bn_axes(ndim: int) -> tuple:
    # (N, C) or (N, C, H, W): statistics per channel
    return (0,) if ndim == 2 else (0,) + tuple(range(2, ndim))


def _broadcast_shape(ndim: int, channels: int) -> tuple:
    return (1, channels) + (1,) * (ndim - 2)


def interval_bn(bounds: IntervalBounds, clean: Variable, gamma, beta, mode=BNMode.TRAIN,
                running_mean=None, running_var=None, momentum: float = 0.1, eps: float = 1e-5,
                center: bool = True, scale: bool = True, frozen: tuple | None = None):
    """
    Batch normalization of the clean activations and the bounds with the
    same per-channel affine map.

    In train mode mean and variance come from ``clean`` (the unperturbed
    batch) and stay on the tape. In eval mode, or when ``frozen`` supplies a
    (mean, var) pair, they are constants. A negative scale swaps the bound
    endpoints.

    Returns (bounds, clean, BNStats).
    """
    if eps <= 0:
        raise ArgumentError(f"batchnorm eps must be > 0, got {eps}")
    mode = BNMode(mode)
    clean = as_variable(clean)
    ndim, channels = clean.ndim, clean.shape[1]
    shape = _broadcast_shape(ndim, channels)
    dtype = clean.dtype

    if frozen is not None or mode == BNMode.EVAL:
        mu_data, var_data = frozen if frozen is not None else (running_mean, running_var)
        mu = Variable(np.asarray(mu_data, dtype=dtype).reshape(shape))
        var = Variable(np.asarray(var_data, dtype=dtype).reshape(shape))
        new_running = (np.asarray(running_mean), np.asarray(running_var))
    else:
        axes = _bn_axes(ndim)
        mu = clean.mean(axis=axes, keepdims=True)
        centered = clean - mu
        var = (centered * centered).mean(axis=axes, keepdims=True)
        new_running = (
            ((1 - momentum) * np.asarray(running_mean) + momentum * mu.data.reshape(-1)).astype(dtype),
            ((1 - momentum) * np.asarray(running_var) + momentum * var.data.reshape(-1)).astype(dtype),
        )

    gamma = as_variable(gamma).reshape(shape)
    beta = as_variable(beta).reshape(shape)

    s = gamma / (var + eps).sqrt() if scale else gamma
    shift = beta - s * mu if center else beta

    s_pos, s_neg = s.relu(), s.neg_part()
    out = IntervalBounds(
        s_pos * bounds.lower + s_neg * bounds.upper + shift,
        s_pos * bounds.upper + s_neg * bounds.lower + shift,
    )
    stats = BNStats(
        mean=mu.data.reshape(-1).copy(),
        var=var.data.reshape(-1).copy(),
        running_mean=new_running[0],
        running_var=new_running[1],
    )
    return out, s * clean + shift, stats
