"""
Finite-difference check of the training objective's gradients.

The objective is piecewise smooth: ReLU gates, weight sign splits, BN scale
signs, the state indicators of the balance regularizer and the min/ReLU
branches of both regularizers all switch between pieces. An entry whose ±step
perturbation changes any of those switches sits on a kink and is skipped.
"""

from dataclasses import dataclass, field

import numpy as np

from autograd.engine import Variable, backward
from config.modes import BNMode
from net.network import Network
from objective.total import total_objective
from tensor.rng import SeededRng
from utils.logger import get_logger

logger = get_logger("GRADCHECK")


@dataclass
class GradcheckReport:
    max_rel_err: float = 0.0
    worst_param: str | None = None
    worst_index: tuple | None = None
    checked: int = 0
    skipped: int = 0
    rows: list = field(default_factory=list)

    def passed(self, tolerance: float) -> bool:
        """False when nothing was compared, e.g. every sampled entry sat on a kink"""
        return self.checked > 0 and self.max_rel_err <= tolerance


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    scale = max(abs(analytic), abs(numeric))
    if scale < 1e-9:
        return 0.0
    return abs(analytic - numeric) / max(scale, floor)


def _balance_flags(trace, tau: float) -> list:
    flags = []
    for record in trace.hidden:
        lower, upper = record.pre.lower.data, record.pre.upper.data
        active, inactive = lower > 0, upper < 0
        if not active.any() or not inactive.any():
            continue
        c = (lower + upper) / 2
        alpha = c[active].sum() / -c[inactive].sum()
        spread = (c - c.mean()) ** 2
        den = spread[inactive].sum()
        beta = spread[active].sum() / den if den > 0 else np.inf
        for ratio in (alpha, beta):
            flags += [ratio > 1, tau - min(ratio, 1 / ratio if ratio else np.inf) > 0]
    return flags


def kink_signature(net: Network, params: dict, components, tau: float) -> bytes:
    """Every discrete switch the objective depends on, packed into bytes"""
    trace = components.trace
    parts = []
    for _, bounds, clean in trace.activations:
        parts += [bounds.lower.data > 0, bounds.upper.data > 0, clean.data > 0]
    for name in sorted(params):
        value = params[name]
        parts += [value > 0, value < 0]
    for stats in trace.bn_stats.values():
        parts.append(stats.var > 0)
    parts.append(components.margins.data > 0)

    final = net.final_layer.index
    W = params[f"{final}.weight"]
    parts.append(W[:, None, :] - W[None, :, :] > 0)

    widths = [trace.input_bounds.width.data.mean()] + [r.width.data.mean() for r in trace.hidden]
    if widths[0] > 0:
        parts.append(np.array([w > 0 and tau - widths[0] / w > 0 for w in widths[1:]], dtype=bool))
    parts.append(np.array(_balance_flags(trace, tau), dtype=bool))

    return b"".join(np.packbits(np.asarray(p, dtype=bool).reshape(-1)).tobytes() for p in parts)


def gradcheck(net: Network, batch, eps: float, reg_cfg, eps_train: float, *, samples_per_param: int = 6,
              step: float = 1e-5, seed: int = 0, mode=BNMode.TRAIN) -> GradcheckReport:
    net = net.astype(np.float64)
    batch = batch.astype(np.float64)

    def evaluate(values: dict, requires_grad: bool = False):
        variables = {name: Variable(v, requires_grad=requires_grad, name=name) for name, v in values.items()}
        loss, components = total_objective(net, batch, eps, reg_cfg, eps_train, params=variables, mode=mode)
        return loss, components, variables

    base = {name: value.copy() for name, value in net.params.items()}
    loss, components, variables = evaluate(base, requires_grad=True)
    grads = backward(loss, params=variables)
    base_signature = kink_signature(net, base, components, reg_cfg.tau)

    report = GradcheckReport()
    rng = SeededRng(seed)
    for k, name in enumerate(sorted(base)):
        value = base[name]
        count = min(samples_per_param, value.size)
        picks = np.sort(rng.child(k).generator.choice(value.size, size=count, replace=False))

        for flat in picks:
            index = np.unravel_index(int(flat), value.shape)
            values = {}
            signatures = []
            for sign in (1.0, -1.0):
                shifted = dict(base)
                shifted[name] = value.copy()
                shifted[name][index] += sign * step
                shifted_loss, shifted_components, _ = evaluate(shifted)
                values[sign] = float(shifted_loss.data)
                signatures.append(kink_signature(net, shifted, shifted_components, reg_cfg.tau))

            if any(sig != base_signature for sig in signatures):
                report.skipped += 1
                continue

            analytic = float(grads[name][index])
            numeric = (values[1.0] - values[-1.0]) / (2 * step)
            err = relative_error(analytic, numeric)
            report.checked += 1
            report.rows.append({
                "param": name,
                "index": "/".join(str(i) for i in index),
                "analytic": analytic,
                "numeric": numeric,
                "rel_err": err,
            })
            if err > report.max_rel_err or report.worst_param is None:
                report.max_rel_err = max(err, report.max_rel_err)
                report.worst_param, report.worst_index = name, tuple(int(i) for i in index)

    logger.info(
        f"Gradcheck: {report.checked} entries checked, {report.skipped} skipped at kinks, "
        f"max rel err {report.max_rel_err:.3e} at {report.worst_param}{list(report.worst_index or ())}"
    )
    return report
