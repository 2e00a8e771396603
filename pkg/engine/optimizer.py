"""
Adam with bias correction, global-norm gradient clipping and step-decay
learning rate milestones.
"""

from dataclasses import dataclass, field

import numpy as np

from config.models import TrainConfig
from config.settings import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from utils.exceptions import ArgumentError, DimensionError, NumericError


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def zeros_like(cls, params: dict, **kwargs) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
            **kwargs,
        )


def adam_step(params: dict, grads: dict, state: AdamState, lr: float, *, step_context: int | None = None):
    """Return (new params, new state); inputs are left untouched"""
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"Non-finite gradient for {name}", layer=name, step=step_context)

    t = state.step + 1
    bias1 = 1 - state.beta1 ** t
    bias2 = 1 - state.beta2 ** t

    new_params, new_m, new_v = {}, {}, {}
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(value)
        if grad.shape != value.shape:
            raise DimensionError(f"Gradient for {name} has shape {grad.shape}, parameter has {value.shape}")

        m = state.beta1 * state.m[name] + (1 - state.beta1) * grad  # first moment
        v = state.beta2 * state.v[name] + (1 - state.beta2) * grad * grad  # second moment
        m_hat = m / bias1
        v_hat = v / bias2

        new_params[name] = (value - lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(value.dtype)
        new_m[name] = m.astype(value.dtype)
        new_v[name] = v.astype(value.dtype)

    new_state = AdamState(m=new_m, v=new_v, step=t, beta1=state.beta1, beta2=state.beta2, eps=state.eps)
    return new_params, new_state


def global_norm(grads: dict) -> float:
    total = 0.0
    for name in sorted(grads):
        total += float(np.sum(np.square(grads[name], dtype=np.float64)))
    return float(np.sqrt(total))


def clip_gradients(grads: dict, max_norm: float = 10.0) -> dict:
    if max_norm <= 0:
        raise ArgumentError(f"max_norm must be > 0, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return dict(grads)
    factor = max_norm / norm
    return {name: (grad * factor).astype(grad.dtype) for name, grad in grads.items()}


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """lr₀·decay^(milestones already reached); epochs are 0-based"""
    passed = sum(1 for milestone in cfg.resolved_milestones() if epoch >= milestone)
    return cfg.lr * cfg.lr_decay ** passed
