"""Training objective: L = L_rob + λ·(L_tightness + L_relu)."""

from dataclasses import dataclass

from autograd.engine import Variable
from config.models import RegularizerConfig
from config.modes import BNMode
from ibp.propagate import BoundTrace, margin_lower_bounds, propagate
from net.network import Network
from objective.losses import reg_relu_balance, reg_tightness, robust_ce_loss
from objective.schedules import lambda_value


@dataclass
class ObjectiveComponents:
    total: float
    robust: float
    tightness: float
    relu: float
    lam: float
    eps: float
    trace: BoundTrace
    margins: Variable


def total_objective(net: Network, batch, eps: float, cfg: RegularizerConfig, eps_train: float, *,
                    params: dict | None = None, mode=BNMode.TRAIN, step: int | None = None):
    """
    Returns (loss node, components). ``batch`` is any object with ``images``,
    ``labels``, ``mean``, ``std`` and ``clip`` (a Dataset slice).

    Both regularizers are always evaluated so they can be logged; a disabled
    regularizer, or λ = 0, leaves the loss node equal to L_rob itself.
    """
    trace = propagate(net, batch.images, eps, mode, params=params, clip=batch.clip,
                      mean=batch.mean, std=batch.std, step=step)
    margins = margin_lower_bounds(trace, net, batch.labels)

    robust = robust_ce_loss(margins)
    tightness = reg_tightness(trace, cfg.tau)
    relu = reg_relu_balance(trace, cfg.tau)
    lam = lambda_value(cfg.lambda0, eps, eps_train)

    enabled = [reg for reg, on in ((tightness, cfg.use_tightness), (relu, cfg.use_relu)) if on]
    loss = robust
    if lam > 0 and enabled:
        penalty = enabled[0] if len(enabled) == 1 else enabled[0] + enabled[1]
        loss = robust + penalty * lam

    components = ObjectiveComponents(
        total=float(loss.data),
        robust=float(robust.data),
        tightness=float(tightness.data),
        relu=float(relu.data),
        lam=lam,
        eps=float(eps),
        trace=trace,
        margins=margins,
    )
    return loss, components
