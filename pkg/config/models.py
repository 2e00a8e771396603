"""
Pydantic models for run configuration.

A run configuration is one JSON document with a section per concern. Every
model forbids unknown keys, so a typo in a config file or a dotted override
fails validation instead of being ignored.
"""

from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.modes import DatasetKind, InitScheme
from config.settings import (
    AUDIT_FAN_INS,
    AUDIT_TRIALS,
    CLIP_RANGE,
    EPS_EXP_FRACTION,
    EPS_START_FACTOR,
    GRAD_CLIP_NORM,
    LAMBDA0,
    LEARNING_RATE,
    LR_DECAY,
    LR_MILESTONES,
    MNIST_DIR,
    OUTPUT_DIR,
    TAU,
)
from net.layers import ArchConfig


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InitConfig(Section):
    """Weight initialization"""
    scheme: InitScheme = InitScheme.IBP
    residual_calibration: bool = True


class RegularizerConfig(Section):
    """Warmup regularizers"""
    tau: float = Field(default=TAU, gt=0.0, le=1.0)
    lambda0: float = Field(default=LAMBDA0, ge=0.0)
    use_tightness: bool = True
    use_relu: bool = True


class TrainConfig(Section):
    """Optimizer, epochs and the regularizer weights"""
    epochs: int = Field(default=70, ge=1)
    batch_size: int = Field(default=256, ge=1)
    lr: float = Field(default=LEARNING_RATE, gt=0.0)
    lr_decay: float = Field(default=LR_DECAY, gt=0.0, le=1.0)
    milestones: Optional[List[int]] = None
    grad_clip: float = Field(default=GRAD_CLIP_NORM, gt=0.0)
    seed: int = Field(default=0, ge=0)
    dtype: str = "float32"
    tau: float = Field(default=TAU, gt=0.0, le=1.0)
    lambda0: float = Field(default=LAMBDA0, ge=0.0)
    use_tightness: bool = True
    use_relu: bool = True
    shuffle: bool = True

    @field_validator("dtype")
    @classmethod
    def check_dtype(cls, value):
        if value not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {value}")
        return value

    @field_validator("milestones")
    @classmethod
    def check_milestones(cls, value):
        if value is not None and any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"milestones must be strictly increasing, got {value}")
        return value

    def resolved_milestones(self) -> Tuple[int, ...]:
        if self.milestones is not None:
            return tuple(self.milestones)
        if self.epochs in LR_MILESTONES:
            return LR_MILESTONES[self.epochs]
        return (round(0.7 * self.epochs), round(0.85 * self.epochs))

    def regularizer(self) -> RegularizerConfig:
        return RegularizerConfig(
            tau=self.tau,
            lambda0=self.lambda0,
            use_tightness=self.use_tightness,
            use_relu=self.use_relu,
        )


class ScheduleConfig(Section):
    """ε schedule: start epochs at ε=0, increase epochs, final epochs at ε_train"""
    eps_target: float = Field(default=0.1, gt=0.0)
    eps_train: Optional[float] = Field(default=None, gt=0.0)
    start_epochs: int = Field(default=0, ge=0)
    increase_epochs: int = Field(default=20, ge=0)
    final_epochs: Optional[int] = Field(default=None, ge=0)
    exp_fraction: float = Field(default=EPS_EXP_FRACTION, gt=0.0, le=1.0)
    start_factor: float = Field(default=EPS_START_FACTOR, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def check_factors(self):
        if self.start_factor > self.exp_fraction:
            raise ValueError(
                f"start_factor ({self.start_factor}) must not exceed exp_fraction ({self.exp_fraction})"
            )
        return self

    @property
    def eps_train_value(self) -> float:
        return self.eps_train if self.eps_train is not None else self.eps_target


class DataConfig(Section):
    kind: DatasetKind = DatasetKind.BLOBS
    mnist_dir: Path = MNIST_DIR
    train_limit: Optional[int] = Field(default=None, ge=1)
    test_limit: Optional[int] = Field(default=None, ge=1)
    # None: MNIST constants for mnist, no normalization for blobs
    mean: Optional[List[float]] = None
    std: Optional[List[float]] = None
    clip: Tuple[float, float] = CLIP_RANGE

    # synthetic blobs
    num_classes: int = Field(default=3, ge=2)
    dim: int = Field(default=8, ge=1)
    n_per_class: int = Field(default=100, ge=1)
    test_per_class: int = Field(default=50, ge=1)
    separation: float = Field(default=0.3, gt=0.0)
    cluster_std: float = Field(default=0.03, ge=0.0)
    seed: int = Field(default=0, ge=0)

    @field_validator("std")
    @classmethod
    def check_std(cls, value):
        if value is not None and any(s <= 0 for s in value):
            raise ValueError(f"normalization std must be > 0, got {value}")
        return value

    @model_validator(mode="after")
    def check_clip(self):
        if self.clip[0] >= self.clip[1]:
            raise ValueError(f"clip range must be increasing, got {self.clip}")
        return self


class OutputConfig(Section):
    dir: Path = OUTPUT_DIR
    resume: bool = False


class EvalConfig(Section):
    checkpoint: Optional[Path] = None
    eps_list: List[float] = Field(default_factory=lambda: [0.0, 0.1])
    batch_size: int = Field(default=500, ge=1)

    @field_validator("eps_list")
    @classmethod
    def check_eps(cls, value):
        if any(e < 0 for e in value):
            raise ValueError(f"eps values must be >= 0, got {value}")
        return value


class AuditConfig(Section):
    schemes: List[InitScheme] = Field(default_factory=lambda: list(InitScheme))
    trials: int = Field(default=AUDIT_TRIALS, ge=1)
    fan_ins: List[int] = Field(default_factory=lambda: list(AUDIT_FAN_INS))
    fan_out: int = Field(default=16, ge=1)
    profile_depth: int = Field(default=7, ge=2)
    profile_width: int = Field(default=512, ge=1)
    profile_input_dim: int = Field(default=784, ge=1)
    profile_batch: int = Field(default=32, ge=1)
    profile_seeds: int = Field(default=10, ge=1)
    eps: float = Field(default=0.1, gt=0.0)
    use_arch: bool = False


class GradcheckConfig(Section):
    eps: float = Field(default=0.05, ge=0.0)
    batch_size: int = Field(default=8, ge=1)
    samples_per_param: int = Field(default=6, ge=1)
    step: float = Field(default=1e-5, gt=0.0)
    tolerance: float = Field(default=1e-4, gt=0.0)
    seed: int = Field(default=0, ge=0)


class RunConfig(Section):
    arch: ArchConfig = Field(default_factory=lambda: ArchConfig(preset="mlp", input_shape=(1, 1, 8),
                                                                num_classes=3, preset_args={"widths": [32, 32]}))
    init: InitConfig = Field(default_factory=InitConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    sched: ScheduleConfig = Field(default_factory=ScheduleConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    audit: AuditConfig = Field(default_factory=AuditConfig)
    gradcheck: GradcheckConfig = Field(default_factory=GradcheckConfig)

    @model_validator(mode="after")
    def check_phases(self):
        s = self.sched
        used = s.start_epochs + s.increase_epochs
        if used > self.train.epochs:
            raise ValueError(
                f"start ({s.start_epochs}) + increase ({s.increase_epochs}) epochs exceed total {self.train.epochs}"
            )
        if s.final_epochs is not None and used + s.final_epochs != self.train.epochs:
            raise ValueError(
                f"phase epochs {s.start_epochs}+{s.increase_epochs}+{s.final_epochs} do not sum to {self.train.epochs}"
            )
        return self

    @property
    def final_epochs(self) -> int:
        return self.train.epochs - self.sched.start_epochs - self.sched.increase_epochs
