"""Named architectures used by configs, audits and tests."""

from config.modes import LayerKind
from net.layers import LayerSpec
from utils.exceptions import BuildError


def dense(out_features: int) -> LayerSpec:
    return LayerSpec(kind=LayerKind.DENSE, out_features=out_features)


def conv(out_channels: int, kernel_size: int = 3, stride: int = 1, padding: int = 1) -> LayerSpec:
    return LayerSpec(kind=LayerKind.CONV2D, out_channels=out_channels,
                     kernel_size=kernel_size, stride=stride, padding=padding)


def relu() -> LayerSpec:
    return LayerSpec(kind=LayerKind.RELU)


def flatten() -> LayerSpec:
    return LayerSpec(kind=LayerKind.FLATTEN)


def mlp(num_classes: int, widths=(512, 512)) -> list[LayerSpec]:
    layers = [flatten()]
    for width in widths:
        layers += [dense(width), relu()]
    layers.append(dense(num_classes))
    return layers


def small_cnn(num_classes: int, channels=(16, 32, 32), dense_width: int = 100) -> list[LayerSpec]:
    """3 conv + 1 hidden dense; the two strided convs halve the spatial size"""
    c1, c2, c3 = channels
    return [
        conv(c1, 3, 1, 1), relu(),
        conv(c2, 4, 2, 1), relu(),
        conv(c3, 4, 2, 1), relu(),
        flatten(),
        dense(dense_width), relu(),
        dense(num_classes),
    ]


def cnn7(num_classes: int, width_factor: float = 1.0, dense_width: int = 512) -> list[LayerSpec]:
    """Five convs (64, 64, 128, 128, 128 scaled by width_factor) and one hidden dense layer"""
    def w(c):
        return max(1, int(round(c * width_factor)))

    return [
        conv(w(64), 3, 1, 1), relu(),
        conv(w(64), 3, 1, 1), relu(),
        conv(w(128), 4, 2, 1), relu(),
        conv(w(128), 3, 1, 1), relu(),
        conv(w(128), 3, 1, 1), relu(),
        flatten(),
        dense(dense_width), relu(),
        dense(num_classes),
    ]


def residual_mlp(num_classes: int, width: int = 256, blocks: int = 1) -> list[LayerSpec]:
    layers = [flatten(), dense(width), relu()]
    for _ in range(blocks):
        layers += [
            LayerSpec(kind=LayerKind.RESIDUAL_BEGIN),
            dense(width), relu(), dense(width),
            LayerSpec(kind=LayerKind.RESIDUAL_ADD),
            relu(),
        ]
    layers += [dense(width), relu(), dense(num_classes)]
    return layers


def residual_cnn(num_classes: int, channels: int = 16, blocks: int = 1, dense_width: int = 100) -> list[LayerSpec]:
    """Stem conv, ``blocks`` same-padded two-conv residual blocks, then a strided conv and a dense head"""
    layers = [conv(channels, 3, 1, 1), relu()]
    for _ in range(blocks):
        layers += [
            LayerSpec(kind=LayerKind.RESIDUAL_BEGIN),
            conv(channels, 3, 1, 1), relu(), conv(channels, 3, 1, 1),
            LayerSpec(kind=LayerKind.RESIDUAL_ADD),
            relu(),
        ]
    layers += [conv(channels, 4, 2, 1), relu(), flatten(), dense(dense_width), relu(), dense(num_classes)]
    return layers


PRESETS = {
    "mlp": mlp,
    "small_cnn": small_cnn,
    "cnn7": cnn7,
    "residual_mlp": residual_mlp,
    "residual_cnn": residual_cnn,
}


def expand(name: str, num_classes: int, args: dict | None = None) -> list[LayerSpec]:
    if name not in PRESETS:
        raise BuildError(f"Unknown architecture preset '{name}', expected one of {sorted(PRESETS)}")
    try:
        return PRESETS[name](num_classes, **(args or {}))
    except TypeError as e:
        raise BuildError(f"Bad arguments for preset '{name}': {e}") from e
