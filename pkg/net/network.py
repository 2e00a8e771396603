"""
Network container and architecture builder.

Parameters live in a flat ``{name: ndarray}`` store keyed by layer position:
``"<i>.weight"``, ``"<i>.bias"`` for affine layers, ``"<i>.gamma"``,
``"<i>.beta"`` for batchnorm, and the batchnorm running statistics
``"<i>.running_mean"``, ``"<i>.running_var"`` in a separate buffer store.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from autograd.engine import Variable
from config.modes import LayerKind
from net import presets
from net.layers import ArchConfig, LayerSpec
from tensor.ops import conv_output_size
from utils.exceptions import BuildError, DimensionError
from utils.logger import get_logger

logger = get_logger("NETWORK")


@dataclass(frozen=True)
class Layer:
    index: int
    spec: LayerSpec
    in_shape: tuple
    out_shape: tuple
    fan_in: int | None = None
    fan_out: int | None = None

    @property
    def kind(self) -> LayerKind:
        return self.spec.kind

    @property
    def is_affine(self) -> bool:
        return self.spec.is_affine

    @property
    def tag(self) -> str:
        return f"{self.index}:{self.kind.value}"


@dataclass
class Network:
    input_shape: tuple
    num_classes: int
    layers: list
    params: dict
    buffers: dict
    arch: dict
    dtype: np.dtype = field(default_factory=lambda: np.dtype(np.float32))
    calibrated: bool = False

    # -------------------------
    # Structure
    # -------------------------

    @property
    def affine_layers(self) -> list:
        return [layer for layer in self.layers if layer.is_affine]

    @property
    def hidden_count(self) -> int:
        """m: affine layers excluding the classification layer"""
        return len(self.affine_layers) - 1

    @property
    def fan_ins(self) -> list:
        return [layer.fan_in for layer in self.affine_layers]

    @property
    def final_layer(self) -> Layer:
        return self.layers[-1]

    # -------------------------
    # Parameter access
    # -------------------------

    def variables(self, requires_grad: bool = True) -> dict:
        return {
            name: Variable(value, requires_grad=requires_grad, name=name)
            for name, value in self.params.items()
        }

    def copy(self) -> "Network":
        return replace(
            self,
            params={k: v.copy() for k, v in self.params.items()},
            buffers={k: v.copy() for k, v in self.buffers.items()},
        )

    def astype(self, dtype) -> "Network":
        dtype = np.dtype(dtype)
        return replace(
            self,
            params={k: v.astype(dtype) for k, v in self.params.items()},
            buffers={k: v.astype(dtype) for k, v in self.buffers.items()},
            dtype=dtype,
        )

    def with_params(self, params: dict) -> "Network":
        missing = set(self.params) - set(params)
        if missing:
            raise BuildError(f"Parameter update is missing {sorted(missing)}")
        return replace(self, params={k: np.asarray(params[k], dtype=self.dtype) for k in self.params})

    def commit_bn_stats(self, updates: dict) -> "Network":
        """Store running statistics returned by a train-mode propagate"""
        buffers = dict(self.buffers)
        for index, stats in updates.items():
            buffers[f"{index}.running_mean"] = stats.running_mean.astype(self.dtype)
            buffers[f"{index}.running_var"] = stats.running_var.astype(self.dtype)
        return replace(self, buffers=buffers)


# -------------------------
# Builder
# -------------------------

def _with_full_bn(specs: list, arch: ArchConfig) -> list:
    affine_positions = [i for i, spec in enumerate(specs) if spec.is_affine]
    last_affine = affine_positions[-1] if affine_positions else -1
    out = []
    for i, spec in enumerate(specs):
        out.append(spec)
        followed_by_bn = i + 1 < len(specs) and specs[i + 1].kind == LayerKind.BATCHNORM
        if spec.is_affine and i != last_affine and not followed_by_bn:
            out.append(LayerSpec(
                kind=LayerKind.BATCHNORM,
                momentum=arch.bn_momentum,
                eps=arch.bn_eps,
                center=arch.bn_center,
                scale=arch.bn_scale,
            ))
    return out


def build(arch, dtype=np.float32) -> Network:
    arch = arch if isinstance(arch, ArchConfig) else ArchConfig.model_validate(arch)
    dtype = np.dtype(dtype)

    specs = list(arch.layers) or presets.expand(arch.preset, arch.num_classes, arch.preset_args)
    if arch.full_bn:
        specs = _with_full_bn(specs, arch)

    shape = tuple(arch.input_shape)
    layers, params, buffers = [], {}, {}
    residual_stack = []

    for index, spec in enumerate(specs):
        in_shape = shape
        fan_in = fan_out = None

        if spec.kind == LayerKind.DENSE:
            if len(shape) != 1:
                raise BuildError(f"Layer {index}: dense needs a flat input, got {shape} (add a flatten layer)")
            if spec.in_features is not None and spec.in_features != shape[0]:
                raise BuildError(f"Layer {index}: dense in_features={spec.in_features} but input has {shape[0]}")
            fan_in, fan_out = shape[0], spec.out_features
            params[f"{index}.weight"] = np.zeros((fan_out, fan_in), dtype=dtype)
            params[f"{index}.bias"] = np.zeros(fan_out, dtype=dtype)
            shape = (fan_out,)

        elif spec.kind == LayerKind.CONV2D:
            if len(shape) != 3:
                raise BuildError(f"Layer {index}: conv2d needs a C x H x W input, got {shape}")
            c, h, w = shape
            if spec.in_channels is not None and spec.in_channels != c:
                raise BuildError(f"Layer {index}: conv2d in_channels={spec.in_channels} but input has {c}")
            k = spec.kernel_size
            try:
                out_h = conv_output_size(h, k, spec.stride, spec.padding)
                out_w = conv_output_size(w, k, spec.stride, spec.padding)
            except DimensionError as e:
                raise BuildError(f"Layer {index}: {e}") from e
            fan_in, fan_out = k * k * c, spec.out_channels
            params[f"{index}.weight"] = np.zeros((fan_out, c, k, k), dtype=dtype)
            params[f"{index}.bias"] = np.zeros(fan_out, dtype=dtype)
            shape = (fan_out, out_h, out_w)

        elif spec.kind == LayerKind.BATCHNORM:
            channels = shape[0]
            if spec.channels is not None and spec.channels != channels:
                raise BuildError(f"Layer {index}: batchnorm channels={spec.channels} but input has {channels}")
            params[f"{index}.gamma"] = np.ones(channels, dtype=dtype)
            params[f"{index}.beta"] = np.zeros(channels, dtype=dtype)
            buffers[f"{index}.running_mean"] = np.zeros(channels, dtype=dtype)
            buffers[f"{index}.running_var"] = np.ones(channels, dtype=dtype)

        elif spec.kind == LayerKind.FLATTEN:
            shape = (int(np.prod(shape)),)

        elif spec.kind == LayerKind.RESIDUAL_BEGIN:
            residual_stack.append((index, shape))

        elif spec.kind == LayerKind.RESIDUAL_ADD:
            if not residual_stack:
                raise BuildError(f"Layer {index}: residual_add without a matching residual_begin")
            begin, skip_shape = residual_stack.pop()
            if skip_shape != shape:
                raise BuildError(f"Layer {index}: residual path {shape} does not match skip {skip_shape} from layer {begin}")

        layers.append(Layer(index, spec, in_shape, shape, fan_in, fan_out))

    if residual_stack:
        raise BuildError(f"Unmatched residual_begin at layers {[i for i, _ in residual_stack]}")
    if not layers or layers[-1].kind != LayerKind.DENSE:
        raise BuildError("The final layer must be a dense classification layer")
    if shape != (arch.num_classes,):
        raise BuildError(f"Final layer produces {shape}, expected ({arch.num_classes},)")

    description = arch.model_dump(mode="json")
    description["layers"] = [spec.model_dump(mode="json") for spec in specs]
    description["preset"] = None
    description["preset_args"] = {}
    description["full_bn"] = False

    net = Network(
        input_shape=tuple(arch.input_shape),
        num_classes=arch.num_classes,
        layers=layers,
        params=params,
        buffers=buffers,
        arch=description,
        dtype=dtype,
    )
    logger.info(
        f"Built network: {len(layers)} layers, m={net.hidden_count} hidden affine, "
        f"fan-in {net.fan_ins}, {sum(v.size for v in params.values())} parameters"
    )
    return net
