import numpy as np
import pytest
from pydantic import ValidationError

from config.modes import LayerKind
from net import presets
from net.layers import ArchConfig, LayerSpec
from net.network import build
from utils.exceptions import BuildError


def test_small_cnn_shapes_and_fan_ins():
    net = build(ArchConfig(input_shape=(1, 28, 28), num_classes=10, preset="small_cnn"))
    assert net.fan_ins == [9, 256, 512, 1568, 100]
    assert net.hidden_count == 4
    assert net.final_layer.out_shape == (10,)
    assert net.params["0.weight"].shape == (16, 1, 3, 3)
    assert net.dtype == np.float32


def test_cnn7_first_conv_fan_in():
    net = build(ArchConfig(input_shape=(3, 32, 32), num_classes=10, preset="cnn7",
                           preset_args={"width_factor": 0.25, "dense_width": 32}))
    assert net.fan_ins[0] == 27
    assert net.hidden_count == 6


def test_full_bn_inserts_after_hidden_affine_layers():
    net = build(ArchConfig(input_shape=(1, 1, 6), num_classes=3, preset="mlp",
                           preset_args={"widths": [8, 8]}, full_bn=True))
    kinds = [layer.kind for layer in net.layers]
    assert kinds.count(LayerKind.BATCHNORM) == 2
    for i, kind in enumerate(kinds[:-1]):
        if kind == LayerKind.DENSE:
            assert kinds[i + 1] == LayerKind.BATCHNORM
    assert kinds[-1] == LayerKind.DENSE
    assert net.buffers["2.running_var"].tolist() == [1.0] * 8


def test_description_is_explicit_and_rebuilds():
    net = build(ArchConfig(input_shape=(1, 1, 6), num_classes=3, preset="residual_mlp",
                           preset_args={"width": 8}, full_bn=True))
    assert net.arch["preset"] is None and net.arch["full_bn"] is False
    again = build(net.arch)
    assert [layer.tag for layer in again.layers] == [layer.tag for layer in net.layers]
    assert {k: v.shape for k, v in again.params.items()} == {k: v.shape for k, v in net.params.items()}


@pytest.mark.parametrize("layers, message", [
    ([presets.dense(4)], "flat input"),
    ([presets.flatten(), LayerSpec(kind=LayerKind.RESIDUAL_BEGIN), presets.dense(3)], "Unmatched"),
    ([presets.flatten(), LayerSpec(kind=LayerKind.RESIDUAL_ADD), presets.dense(3)], "without a matching"),
    ([presets.flatten(), presets.dense(4)], "expected"),
    ([presets.flatten(), presets.dense(3), presets.relu()], "final layer"),
    ([presets.conv(4, 2, 2, 0), presets.flatten(), presets.dense(3)], "conv"),
])
def test_build_errors(layers, message):
    with pytest.raises(BuildError, match=message):
        build(ArchConfig(input_shape=(1, 5, 5), num_classes=3, layers=layers))


def test_residual_shape_mismatch():
    layers = [presets.flatten(), LayerSpec(kind=LayerKind.RESIDUAL_BEGIN), presets.dense(7),
              LayerSpec(kind=LayerKind.RESIDUAL_ADD), presets.dense(3)]
    with pytest.raises(BuildError, match="does not match skip"):
        build(ArchConfig(input_shape=(1, 1, 5), num_classes=3, layers=layers))


def test_unknown_preset():
    with pytest.raises(BuildError):
        build(ArchConfig(input_shape=(1, 1, 5), num_classes=3, preset="vgg"))


def test_spec_validation():
    with pytest.raises(ValidationError):
        LayerSpec(kind=LayerKind.DENSE)
    with pytest.raises(ValidationError):
        ArchConfig(input_shape=(1, 1, 5), num_classes=3)
    with pytest.raises(ValidationError):
        LayerSpec(kind=LayerKind.DENSE, out_features=3, bogus=1)


def test_with_params_astype_and_copy(mlp_factory):
    net = mlp_factory()
    with pytest.raises(BuildError):
        net.with_params({"1.weight": net.params["1.weight"]})

    single = net.astype(np.float32)
    assert all(v.dtype == np.float32 for v in single.params.values())
    assert net.params["1.weight"].dtype == np.float64

    clone = net.copy()
    clone.params["1.weight"][0, 0] += 1.0
    assert clone.params["1.weight"][0, 0] != net.params["1.weight"][0, 0]


def test_variables_are_named_leaves(mlp_factory):
    net = mlp_factory()
    variables = net.variables()
    assert set(variables) == set(net.params)
    assert all(v.requires_grad and v.name == name for name, v in variables.items())
