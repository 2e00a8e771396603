"""
Layer-by-layer clean and interval forward passes.

``propagate`` walks the network once, advancing the clean activations and the
interval bounds together so that batchnorm can take its statistics from the
clean batch and apply the same affine map to both. The result is a
``BoundTrace`` holding, for each hidden affine layer, the bounds and clean
values at the point the following ReLU consumes them (after BN and any
residual addition).

``propagate`` never mutates the network: running-statistic updates are
returned in ``trace.bn_stats`` for the caller to commit.
"""

from dataclasses import dataclass, field

import numpy as np

from autograd.engine import Variable, conv2d
from config.modes import BNMode, LayerKind
from config.settings import CLIP_RANGE
from ibp.bounds import (
    IntervalBounds,
    as_variable,
    input_interval,
    interval_affine,
    interval_bn,
    interval_conv,
    interval_relu,
    normalize_input,
)
from net.network import Network
from utils.exceptions import ArgumentError
from utils.validators import require_finite


@dataclass
class LayerRecord:
    """Bounds of one hidden affine layer i ∈ 1..m"""
    index: int
    tag: str
    pre: IntervalBounds | None = None
    post: IntervalBounds | None = None
    clean: Variable | None = None

    @property
    def centers(self) -> Variable:
        return (self.pre.lower + self.pre.upper) * 0.5

    @property
    def width(self) -> Variable:
        return self.pre.width


@dataclass
class BoundTrace:
    eps: float
    mode: BNMode
    input_bounds: IntervalBounds
    clean_input: Variable
    hidden: list = field(default_factory=list)
    final_bounds: IntervalBounds | None = None
    final_clean: Variable | None = None
    logit_bounds: IntervalBounds | None = None
    logits: Variable | None = None
    bn_stats: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    activations: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.hidden)


def _constants(net: Network) -> dict:
    return {name: Variable(value, name=name) for name, value in net.params.items()}


def _check(bounds: IntervalBounds, clean: Variable, tag: str, step):
    require_finite(bounds.lower.data, "lower bounds", layer=tag, step=step)
    require_finite(bounds.upper.data, "upper bounds", layer=tag, step=step)
    require_finite(clean.data, "clean activations", layer=tag, step=step)


def _close(trace: BoundTrace, record: LayerRecord | None, bounds: IntervalBounds, clean: Variable):
    """Linear chain with no ReLU before the next affine layer: pre == post"""
    if record is not None and record.post is None:
        record.pre, record.post, record.clean = bounds, bounds, clean
        trace.hidden.append(record)


def propagate(net: Network, x, eps: float, mode=BNMode.TRAIN, *, params: dict | None = None,
              clip=CLIP_RANGE, mean=0.0, std=1.0, frozen_stats: dict | None = None,
              step: int | None = None) -> BoundTrace:
    mode = BNMode(mode)
    x = np.asarray(x, dtype=net.dtype)
    if x.shape[1:] != tuple(net.input_shape):
        raise ArgumentError(f"Batch shape {x.shape[1:]} does not match network input {tuple(net.input_shape)}")
    params = params if params is not None else _constants(net)

    bounds = input_interval(x, eps, clip, mean, std)
    clean = Variable(normalize_input(x, mean, std))
    trace = BoundTrace(eps=float(eps), mode=mode, input_bounds=bounds, clean_input=clean, params=params)

    final_index = net.final_layer.index
    record = None
    skips = []

    for layer in net.layers:
        i, spec = layer.index, layer.spec

        if layer.kind == LayerKind.DENSE:
            _close(trace, record, bounds, clean)
            if i == final_index:
                trace.final_bounds, trace.final_clean = bounds, clean
            W, b = params[f"{i}.weight"], params[f"{i}.bias"]
            bounds = interval_affine(W, b, bounds)
            clean = clean @ W.mT + b
            record = None if i == final_index else LayerRecord(i, layer.tag)

        elif layer.kind == LayerKind.CONV2D:
            _close(trace, record, bounds, clean)
            K, b = params[f"{i}.weight"], params[f"{i}.bias"]
            bounds = interval_conv(K, b, spec.stride, spec.padding, bounds)
            clean = conv2d(clean, K, b, spec.stride, spec.padding)
            record = LayerRecord(i, layer.tag)

        elif layer.kind == LayerKind.BATCHNORM:
            bounds, clean, stats = interval_bn(
                bounds, clean, params[f"{i}.gamma"], params[f"{i}.beta"], mode,
                running_mean=net.buffers[f"{i}.running_mean"],
                running_var=net.buffers[f"{i}.running_var"],
                momentum=spec.momentum, eps=spec.eps, center=spec.center, scale=spec.scale,
                frozen=(frozen_stats or {}).get(i),
            )
            trace.bn_stats[i] = stats

        elif layer.kind == LayerKind.RELU:
            pre_bounds, pre_clean = bounds, clean
            bounds, clean = interval_relu(bounds), clean.relu()
            if record is not None and record.post is None:
                record.pre, record.post, record.clean = pre_bounds, bounds, pre_clean
                trace.hidden.append(record)

        elif layer.kind == LayerKind.FLATTEN:
            n = clean.shape[0]
            bounds, clean = bounds.reshape((n, -1)), clean.reshape((n, -1))

        elif layer.kind == LayerKind.RESIDUAL_BEGIN:
            skips.append((bounds, clean))

        elif layer.kind == LayerKind.RESIDUAL_ADD:
            skip_bounds, skip_clean = skips.pop()
            bounds, clean = bounds + skip_bounds, clean + skip_clean

        _check(bounds, clean, layer.tag, step)
        trace.activations.append((layer.tag, bounds, clean))

    trace.logit_bounds, trace.logits = bounds, clean
    return trace


def clean_forward(net: Network, x, mode=BNMode.EVAL, *, mean=0.0, std=1.0,
                  frozen_stats: dict | None = None) -> list:
    """Clean activations after every layer, as (tag, ndarray) pairs"""
    trace = propagate(net, x, 0.0, mode, mean=mean, std=std, frozen_stats=frozen_stats)
    return [(tag, clean.data) for tag, _, clean in trace.activations]


def frozen_stats_of(trace: BoundTrace) -> dict:
    """BN statistics a trace used, for re-running other inputs through the same affine maps"""
    return {index: (stats.mean, stats.var) for index, stats in trace.bn_stats.items()}


# -------------------------
# Margins
# -------------------------

def _spec_matrix(y: np.ndarray, num_classes: int, dtype) -> np.ndarray:
    """(N, K-1, K) rows e_y - e_i for every i != y"""
    n = y.shape[0]
    others = np.array([[i for i in range(num_classes) if i != label] for label in y], dtype=np.int64)
    C = np.zeros((n, num_classes - 1, num_classes), dtype=dtype)
    rows = np.arange(num_classes - 1)
    for j in range(n):
        C[j, rows, y[j]] = 1
        C[j, rows, others[j]] = -1
    return C


def _check_labels(y, num_classes: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if np.any(y < 0) or np.any(y >= num_classes):
        raise ArgumentError(f"labels must lie in [0, {num_classes}), got {y.min()}..{y.max()}")
    return y


def margin_lower_bounds(trace: BoundTrace, net: Network, y) -> Variable:
    """
    Lower bounds of logit_y - logit_i for every i != y, shape (N, K-1).

    The rows e_y - e_i are folded into the final affine layer before the
    interval step, which is never looser than bounding the logits first.
    """
    y = _check_labels(y, net.num_classes)
    if y.shape[0] != trace.final_bounds.shape[0]:
        raise ArgumentError(f"{y.shape[0]} labels for a batch of {trace.final_bounds.shape[0]}")

    i = net.final_layer.index
    W, b = trace.params[f"{i}.weight"], trace.params[f"{i}.bias"]
    C = as_variable(_spec_matrix(y, net.num_classes, W.dtype))

    W_spec = C @ W                                    # (N, K-1, d)
    b_spec = (C @ b.reshape((-1, 1))).reshape((len(y), -1))

    lower = trace.final_bounds.lower.reshape(trace.final_bounds.shape + (1,))
    upper = trace.final_bounds.upper.reshape(trace.final_bounds.shape + (1,))
    bound = W_spec.relu() @ lower + W_spec.neg_part() @ upper
    return bound.reshape((len(y), -1)) + b_spec


def naive_margin_lower_bounds(trace: BoundTrace, net: Network, y) -> np.ndarray:
    """lower_y - upper_i from the logit bounds, for comparison with the elided margins"""
    y = _check_labels(y, net.num_classes)
    lower, upper = trace.logit_bounds.lower.data, trace.logit_bounds.upper.data
    rows = np.arange(len(y))
    margins = lower[rows, y][:, None] - upper
    keep = np.ones_like(margins, dtype=bool)
    keep[rows, y] = False
    return margins[keep].reshape(len(y), -1)


def clean_margins(trace: BoundTrace, y) -> np.ndarray:
    """logit_y - logit_i for every i != y"""
    logits = trace.logits.data
    y = _check_labels(y, logits.shape[1])
    rows = np.arange(len(y))
    margins = logits[rows, y][:, None] - logits
    keep = np.ones_like(margins, dtype=bool)
    keep[rows, y] = False
    return margins[keep].reshape(len(y), -1)
