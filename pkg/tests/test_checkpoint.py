import json
import struct

import numpy as np
import pytest

from config.settings import CHECKPOINT_MAGIC
from engine.optimizer import AdamState, adam_step
from storage import checkpoint
from storage.checkpoint import (
    load_checkpoint,
    load_dataset,
    read_container,
    save_checkpoint,
    save_dataset,
    write_container,
)
from utils.exceptions import CheckpointError


@pytest.fixture
def trained(tiny_net):
    grads = {k: np.full_like(v, 0.1) for k, v in tiny_net.params.items()}
    params, adam = adam_step(tiny_net.params, grads, AdamState.zeros_like(tiny_net.params), lr=0.01)
    net = tiny_net.with_params(params)
    net.buffers["2.running_mean"][:] = 0.25
    return net, adam


def test_training_checkpoint_restores_everything(tmp_path, trained):
    net, adam = trained
    path = save_checkpoint(tmp_path / "ck.ibp", net, adam, {"epoch": 3, "step": 42})
    saved = load_checkpoint(path)

    assert saved.state == {"epoch": 3, "step": 42}
    assert saved.net.input_shape == net.input_shape and saved.net.num_classes == 3
    assert [layer.tag for layer in saved.net.layers] == [layer.tag for layer in net.layers]
    for name in net.params:
        assert np.array_equal(saved.net.params[name], net.params[name])
        assert np.array_equal(saved.adam.m[name], adam.m[name])
        assert np.array_equal(saved.adam.v[name], adam.v[name])
    for name in net.buffers:
        assert np.array_equal(saved.net.buffers[name], net.buffers[name])
    assert saved.adam.step == 1
    assert saved.net.dtype == np.float64


def test_container_layout(tmp_path):
    path = write_container(tmp_path / "c.ibp", "training", {"k": 1}, {"a": np.arange(3, dtype=np.float32)})
    raw = path.read_bytes()
    assert raw[:8] == CHECKPOINT_MAGIC
    (length,) = struct.unpack("<I", raw[8:12])
    manifest = json.loads(raw[12:12 + length])
    assert manifest["format_version"] == 1
    assert manifest["tensors"] == [{"name": "a", "shape": [3], "dtype": "float32", "offset": 0, "length": 12}]
    assert np.frombuffer(raw[12 + length:], dtype="<f4").tolist() == [0.0, 1.0, 2.0]


def test_dataset_round_trip(tmp_path, blobs):
    ds = load_dataset(save_dataset(tmp_path / "blobs.ibp", blobs))
    assert np.array_equal(ds.images, blobs.images)
    assert np.array_equal(ds.labels, blobs.labels)
    assert ds.meta == blobs.meta and ds.clip == blobs.clip


def test_dataset_with_missing_parts(tmp_path, blobs):
    state = {"num_classes": 3, "split": "train", "mean": [0.0], "std": [1.0], "clip": [0.0, 1.0], "meta": {}}
    no_labels = write_container(tmp_path / "a.ibp", "dataset", state, {"images": blobs.images})
    with pytest.raises(CheckpointError, match="missing tensor labels"):
        load_dataset(no_labels)

    partial = {k: v for k, v in state.items() if k != "split"}
    no_split = write_container(tmp_path / "b.ibp", "dataset", partial,
                               {"images": blobs.images, "labels": blobs.labels})
    with pytest.raises(CheckpointError, match="split"):
        load_dataset(no_split)


def test_wrong_kind(tmp_path, blobs):
    path = save_dataset(tmp_path / "blobs.ibp", blobs)
    with pytest.raises(CheckpointError, match="expected 'training'"):
        load_checkpoint(path)


def test_corrupt_files(tmp_path, trained):
    net, adam = trained
    good = save_checkpoint(tmp_path / "ck.ibp", net, adam).read_bytes()

    with pytest.raises(CheckpointError, match="not found"):
        read_container(tmp_path / "missing.ibp")

    bad_magic = tmp_path / "magic.ibp"
    bad_magic.write_bytes(b"XXXXXXXX" + good[8:])
    with pytest.raises(CheckpointError, match="magic"):
        read_container(bad_magic)

    for cut in (10, 40, len(good) - 4):
        truncated = tmp_path / f"cut{cut}.ibp"
        truncated.write_bytes(good[:cut])
        with pytest.raises(CheckpointError, match="truncated"):
            read_container(truncated)

    padded = tmp_path / "padded.ibp"
    padded.write_bytes(good + b"\0\0\0\0")
    with pytest.raises(CheckpointError):
        read_container(padded)


def test_version_mismatch(tmp_path, monkeypatch, trained):
    net, adam = trained
    monkeypatch.setattr(checkpoint, "CHECKPOINT_VERSION", 2)
    path = save_checkpoint(tmp_path / "v2.ibp", net, adam)
    monkeypatch.setattr(checkpoint, "CHECKPOINT_VERSION", 1)
    with pytest.raises(CheckpointError, match="format version 2"):
        load_checkpoint(path)


def test_no_temp_files_left(tmp_path, trained):
    net, adam = trained
    save_checkpoint(tmp_path / "ck.ibp", net, adam)
    save_checkpoint(tmp_path / "ck.ibp", net, adam)
    assert [p.name for p in tmp_path.iterdir()] == ["ck.ibp"]
