"""
One epoch of certified training, and evaluation of standard/verified error.
"""

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from autograd.engine import backward
from config.models import RunConfig
from config.modes import BNMode
from data_loader.chunker import batch_iter
from data_loader.dataset import Dataset
from engine.optimizer import AdamState, adam_step, clip_gradients, lr_at_epoch
from ibp.propagate import margin_lower_bounds, propagate
from ibp.stats import relu_state_masks
from net.network import Network
from objective.schedules import EpsSchedule, eps_value
from objective.total import total_objective
from tensor.rng import SeededRng
from utils.logger import get_logger
from utils.timer import Timer

logger = get_logger("TRAINER")


@dataclass
class MetricsRow:
    epoch: int
    eps: float
    lam: float
    lr: float
    loss: float
    robust_loss: float
    tightness_loss: float
    relu_loss: float
    standard_error: float
    verified_error: float
    active: float
    inactive: float
    unstable: float
    log_tightness_ratio: float

    @classmethod
    def columns(cls) -> list:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainState:
    net: Network
    adam: AdamState
    epoch: int = 0
    step: int = 0


@dataclass
class EvalResult:
    eps: float
    standard_error: float
    verified_error: float
    active: float
    inactive: float
    unstable: float
    log_tightness_ratio: float


def evaluate(net: Network, data: Dataset, eps_test: float, batch_size: int = 500) -> EvalResult:
    """Clean and certified error with BN running statistics"""
    wrong = unverified = 0
    states = np.zeros(3, dtype=np.int64)
    width_sums = None
    width_counts = None

    for batch in batch_iter(data, batch_size):
        trace = propagate(net, batch.images, eps_test, BNMode.EVAL, clip=batch.clip,
                          mean=batch.mean, std=batch.std)
        margins = margin_lower_bounds(trace, net, batch.labels).data
        predicted = np.argmax(trace.logits.data, axis=1)

        misclassified = predicted != batch.labels
        wrong += int(np.count_nonzero(misclassified))
        unverified += int(np.count_nonzero(misclassified | np.any(margins <= 0, axis=1)))

        widths = [trace.input_bounds.width.data] + [r.width.data for r in trace.hidden]
        sums = np.array([w.sum(dtype=np.float64) for w in widths])
        counts = np.array([w.size for w in widths], dtype=np.float64)
        width_sums = sums if width_sums is None else width_sums + sums
        width_counts = counts if width_counts is None else width_counts + counts

        for record in trace.hidden:
            masks = relu_state_masks(record.pre.lower.data, record.pre.upper.data)
            states += [int(np.count_nonzero(mask)) for mask in masks]

    n = len(data)
    means = width_sums / width_counts
    ratio = math.log(means[-1] / means[0]) if means[0] > 0 and means[-1] > 0 else math.nan
    total_states = int(states.sum()) or 1
    return EvalResult(
        eps=float(eps_test),
        standard_error=wrong / n,
        verified_error=unverified / n,
        active=states[0] / total_states,
        inactive=states[1] / total_states,
        unstable=states[2] / total_states,
        log_tightness_ratio=ratio,
    )


def train_epoch(state: TrainState, train: Dataset, test: Dataset, cfg: RunConfig, sched: EpsSchedule,
                rng: SeededRng) -> tuple:
    """Run one epoch from ``state`` and return (new state, MetricsRow)"""
    timer = Timer()
    net, adam, step = state.net, state.adam, state.step
    reg = cfg.train.regularizer()
    eps_train = cfg.sched.eps_train_value
    lr = lr_at_epoch(cfg.train, state.epoch)

    totals = np.zeros(4)
    batches = 0
    eps = lam = 0.0

    for batch in batch_iter(train, cfg.train.batch_size, cfg.train.shuffle, rng, state.epoch):
        eps = eps_value(sched, step)
        params = net.variables(requires_grad=True)
        loss, parts = total_objective(net, batch, eps, reg, eps_train, params=params, step=step)

        grads = clip_gradients(backward(loss, params=params), cfg.train.grad_clip)
        new_params, adam = adam_step(net.params, grads, adam, lr, step_context=step)
        net = net.with_params(new_params).commit_bn_stats(parts.trace.bn_stats)

        totals += (parts.total, parts.robust, parts.tightness, parts.relu)
        lam = parts.lam
        batches += 1
        step += 1

    result = evaluate(net, test, cfg.sched.eps_target, cfg.eval.batch_size)
    means = totals / max(batches, 1)
    row = MetricsRow(
        epoch=state.epoch,
        eps=eps,
        lam=lam,
        lr=lr,
        loss=float(means[0]),
        robust_loss=float(means[1]),
        tightness_loss=float(means[2]),
        relu_loss=float(means[3]),
        standard_error=result.standard_error,
        verified_error=result.verified_error,
        active=result.active,
        inactive=result.inactive,
        unstable=result.unstable,
        log_tightness_ratio=result.log_tightness_ratio,
    )
    logger.info(
        f"Epoch {state.epoch} | eps={eps:.5f} lam={lam:.4f} lr={lr:.2e} | loss={row.loss:.4f} "
        f"(rob {row.robust_loss:.4f}, tight {row.tightness_loss:.4f}, relu {row.relu_loss:.4f}) | "
        f"std err {row.standard_error:.4f} verified err {row.verified_error:.4f} | "
        f"active/inactive/unstable {row.active:.3f}/{row.inactive:.3f}/{row.unstable:.3f} | "
        f"{timer.elapsed()}s"
    )
    return TrainState(net=net, adam=adam, epoch=state.epoch + 1, step=step), row
