"""Summaries of a BoundTrace: tightness, ReLU states and the bound-growth statistics."""

import math

import numpy as np

from ibp.propagate import BoundTrace


def mean_widths(trace: BoundTrace) -> list:
    """Taped Ê(Δᵢ) for i = 0..m (Δ₀ is the clipped, normalized input box)"""
    return [trace.input_bounds.width.mean()] + [record.width.mean() for record in trace.hidden]


def tightness_stats(trace: BoundTrace) -> list:
    return [float(w.data) for w in mean_widths(trace)]


def log_tightness_ratio(trace: BoundTrace) -> float:
    """log(Ê(Δₘ)/Ê(Δ₀)); nan when either width is 0"""
    widths = tightness_stats(trace)
    first, last = widths[0], widths[-1]
    if first <= 0 or last <= 0:
        return math.nan
    return math.log(last / first)


def relu_state_masks(lower: np.ndarray, upper: np.ndarray):
    """(active, inactive, unstable); h̄ ≤ 0 wins over h̲ ≥ 0 when both hold"""
    inactive = upper <= 0
    active = ~inactive & (lower >= 0)
    unstable = ~inactive & ~active
    return active, inactive, unstable


def relu_state_fractions(trace: BoundTrace) -> dict:
    counts = np.zeros(3, dtype=np.int64)
    for record in trace.hidden:
        masks = relu_state_masks(record.pre.lower.data, record.pre.upper.data)
        counts += [int(np.count_nonzero(mask)) for mask in masks]
    total = int(counts.sum())
    if total == 0:
        return {"active": math.nan, "inactive": math.nan, "unstable": math.nan}
    return {
        "active": counts[0] / total,
        "inactive": counts[1] / total,
        "unstable": counts[2] / total,
    }


def layer_state_fractions(trace: BoundTrace) -> list:
    rows = []
    for record in trace.hidden:
        masks = relu_state_masks(record.pre.lower.data, record.pre.upper.data)
        size = record.pre.lower.data.size
        rows.append({
            "layer": record.tag,
            "active": np.count_nonzero(masks[0]) / size,
            "inactive": np.count_nonzero(masks[1]) / size,
            "unstable": np.count_nonzero(masks[2]) / size,
        })
    return rows


def gap_ratios(trace: BoundTrace) -> list:
    """mean(δᵢ)/mean(Δᵢ) per hidden layer; δ is the post-ReLU width"""
    ratios = []
    for record in trace.hidden:
        pre = float(np.mean(record.pre.width.data, dtype=np.float64))
        post = float(np.mean(record.post.width.data, dtype=np.float64))
        ratios.append(post / pre if pre > 0 else math.nan)
    return ratios


def upper_variances(trace: BoundTrace) -> list:
    """Var(h̄ᵢ) over all neurons and batch elements, per hidden layer"""
    return [float(np.var(record.pre.upper.data, dtype=np.float64)) for record in trace.hidden]


def hidden_sizes(trace: BoundTrace) -> list:
    """Neurons per example for each hidden layer"""
    return [int(np.prod(record.pre.shape[1:])) for record in trace.hidden]
