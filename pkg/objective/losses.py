"""
Robust loss and the two warmup regularizers.

All three return scalar ``Variable`` nodes. The regularizers are averaged over
the m hidden affine layers and scaled by 1/τ, so each lies in [0, 1] per
component (tightness) or [0, 2] (ReLU balance: α term plus β term).
"""

import numpy as np

from autograd.engine import Variable
from ibp.propagate import BoundTrace
from ibp.stats import mean_widths
from utils.exceptions import ArgumentError


def _zero(dtype) -> Variable:
    return Variable(np.zeros((), dtype=dtype))


def _check_tau(tau: float):
    if not 0 < tau <= 1:
        raise ArgumentError(f"tau must be in (0, 1], got {tau}")


def robust_ce_loss(margins: Variable) -> Variable:
    """Mean over the batch of log(1 + Σ_{i≠y} exp(-m_i))"""
    return (-margins).logsumexp(axis=1).softplus().mean()


def cross_entropy(logits: Variable, y) -> Variable:
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    one_hot = np.zeros(logits.shape, dtype=logits.dtype)
    one_hot[np.arange(len(y)), y] = 1
    return (logits.logsumexp(axis=1) - (logits * one_hot).sum(axis=1)).mean()


def reg_tightness(trace: BoundTrace, tau: float) -> Variable:
    """
    (1/(τm))·Σᵢ ReLU(τ - Ê(Δ₀)/Ê(Δᵢ)).

    Zero when ε = 0 (Ê(Δ₀) = 0). A layer with Ê(Δᵢ) = 0 contributes 0.
    """
    _check_tau(tau)
    widths = mean_widths(trace)
    dtype = trace.input_bounds.lower.dtype
    first, hidden = widths[0], widths[1:]
    if not hidden or float(first.data) == 0.0:
        return _zero(dtype)

    total = _zero(dtype)
    for width in hidden:
        if float(width.data) == 0.0:
            continue
        total = total + (tau - first / width).relu()
    return total * (1.0 / (tau * len(hidden)))


def _balance_term(ratio: Variable, tau: float) -> Variable:
    # ties at ratio == 1 take the first branch
    return (tau - ratio.minimum(1 / ratio)).relu()


def relu_balance_terms(trace: BoundTrace, tau: float) -> list:
    """Per hidden layer (α term, β term) as Variables, or None where a layer is skipped"""
    _check_tau(tau)
    dtype = trace.input_bounds.lower.dtype
    terms = []
    for record in trace.hidden:
        lower, upper = record.pre.lower.data, record.pre.upper.data
        active = (lower > 0).astype(dtype)
        inactive = (upper < 0).astype(dtype)
        if not active.any() or not inactive.any():
            terms.append(None)
            continue

        c = record.centers
        alpha = (c * active).sum() / -(c * inactive).sum()

        deviation = c - c.mean()
        spread = deviation * deviation
        beta_num, beta_den = (spread * active).sum(), (spread * inactive).sum()
        if float(beta_den.data) == 0.0 or float(beta_num.data) == 0.0:
            beta_term = Variable(np.asarray(tau, dtype=dtype))
        else:
            beta_term = _balance_term(beta_num / beta_den, tau)

        terms.append((_balance_term(alpha, tau), beta_term))
    return terms


def reg_relu_balance(trace: BoundTrace, tau: float) -> Variable:
    """
    (1/(τm))·Σᵢ [ReLU(τ - min(αᵢ, 1/αᵢ)) + ReLU(τ - min(βᵢ, 1/βᵢ))].

    αᵢ compares the summed centers of active (h̲ > 0) and inactive (h̄ < 0)
    neurons; βᵢ compares their spread around the layer mean center. Layers
    without both an active and an inactive neuron contribute 0.
    """
    dtype = trace.input_bounds.lower.dtype
    terms = relu_balance_terms(trace, tau)
    if not terms:
        return _zero(dtype)

    total = _zero(dtype)
    for term in terms:
        if term is not None:
            total = total + term[0] + term[1]
    return total * (1.0 / (tau * len(terms)))
