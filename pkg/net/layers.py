"""
Architecture description models.

The description is what a run config (and a checkpoint manifest) carries:
an ordered list of ``LayerSpec`` entries plus input shape and class count.
``net.network.build`` turns it into a ``Network`` with resolved shapes and
fan-in / fan-out per affine layer.
"""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.modes import LayerKind
from config.settings import BN_EPS, BN_MOMENTUM


class LayerSpec(BaseModel):
    """One layer of the architecture description"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: LayerKind

    # dense
    in_features: Optional[int] = Field(default=None, ge=1)
    out_features: Optional[int] = Field(default=None, ge=1)

    # conv2d
    in_channels: Optional[int] = Field(default=None, ge=1)
    out_channels: Optional[int] = Field(default=None, ge=1)
    kernel_size: Optional[int] = Field(default=None, ge=1)
    stride: int = Field(default=1, ge=1)
    padding: int = Field(default=0, ge=0)

    # batchnorm
    channels: Optional[int] = Field(default=None, ge=1)
    momentum: float = Field(default=BN_MOMENTUM, ge=0.0, le=1.0)
    eps: float = Field(default=BN_EPS, gt=0.0)
    center: bool = True
    scale: bool = True

    @model_validator(mode="after")
    def check_kind_fields(self):
        if self.kind == LayerKind.DENSE and self.out_features is None:
            raise ValueError("dense layer needs out_features")
        if self.kind == LayerKind.CONV2D and (self.out_channels is None or self.kernel_size is None):
            raise ValueError("conv2d layer needs out_channels and kernel_size")
        return self

    @property
    def is_affine(self) -> bool:
        return self.kind in (LayerKind.DENSE, LayerKind.CONV2D)


class ArchConfig(BaseModel):
    """Architecture description: explicit layers or a named preset"""

    model_config = ConfigDict(extra="forbid")

    input_shape: tuple[int, int, int] = (1, 28, 28)
    num_classes: int = Field(default=10, ge=2)
    layers: list[LayerSpec] = Field(default_factory=list)

    preset: Optional[str] = None
    preset_args: dict[str, Any] = Field(default_factory=dict)

    full_bn: bool = False
    bn_momentum: float = Field(default=BN_MOMENTUM, ge=0.0, le=1.0)
    bn_eps: float = Field(default=BN_EPS, gt=0.0)
    bn_center: bool = True
    bn_scale: bool = True

    @model_validator(mode="after")
    def check_source(self):
        if not self.layers and self.preset is None:
            raise ValueError("architecture needs either 'layers' or 'preset'")
        return self
