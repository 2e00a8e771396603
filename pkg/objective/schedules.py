"""
ε and λ schedules.

ε stays at 0 for ``start_steps`` optimizer steps, then rises over
``increase_steps`` steps: geometrically from ε_t·α₀ to ε_t·f over the first
fraction f of the increase, then linearly to ε_t. After the increase it stays
at ε_t. λ follows ε down from λ₀ to 0.
"""

from dataclasses import dataclass

from config.settings import EPS_EXP_FRACTION, EPS_START_FACTOR
from utils.exceptions import ArgumentError


@dataclass(frozen=True)
class EpsSchedule:
    eps_target: float
    start_steps: int = 0
    increase_steps: int = 0
    final_steps: int = 0
    exp_fraction: float = EPS_EXP_FRACTION
    start_factor: float = EPS_START_FACTOR

    def __post_init__(self):
        if self.eps_target <= 0:
            raise ArgumentError(f"eps_target must be > 0, got {self.eps_target}")
        if min(self.start_steps, self.increase_steps, self.final_steps) < 0:
            raise ArgumentError("schedule phase lengths must be >= 0")
        if not 0 < self.start_factor <= self.exp_fraction <= 1:
            raise ArgumentError(
                f"need 0 < start_factor <= exp_fraction <= 1, got {self.start_factor}, {self.exp_fraction}"
            )

    @classmethod
    def from_epochs(cls, eps_target: float, start_epochs: int, increase_epochs: int, final_epochs: int,
                    batches_per_epoch: int, **kwargs) -> "EpsSchedule":
        return cls(
            eps_target=eps_target,
            start_steps=start_epochs * batches_per_epoch,
            increase_steps=increase_epochs * batches_per_epoch,
            final_steps=final_epochs * batches_per_epoch,
            **kwargs,
        )

    @property
    def warmup_end(self) -> int:
        """First step at which ε = ε_t"""
        return self.start_steps + max(self.increase_steps - 1, 0)

    @property
    def total_steps(self) -> int:
        return self.start_steps + self.increase_steps + self.final_steps


def eps_value(sched: EpsSchedule, step: int) -> float:
    if step < 0:
        raise ArgumentError(f"step must be >= 0, got {step}")
    eps_t = sched.eps_target
    if step < sched.start_steps:
        return 0.0

    t = step - sched.start_steps
    if t >= sched.increase_steps or sched.increase_steps == 1:
        return eps_t

    progress = t / (sched.increase_steps - 1)
    f, a0 = sched.exp_fraction, sched.start_factor
    if progress >= 1.0:
        return eps_t
    if progress <= f:
        return eps_t * a0 * (f / a0) ** (progress / f)
    return eps_t * progress


def lambda_value(lambda0: float, eps: float, eps_target: float) -> float:
    if eps_target <= 0:
        raise ArgumentError(f"eps_target must be > 0, got {eps_target}")
    if eps < 0:
        raise ArgumentError(f"eps must be >= 0, got {eps}")
    return max(0.0, lambda0 * (1.0 - eps / eps_target))
