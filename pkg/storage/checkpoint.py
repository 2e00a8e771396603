"""
Checkpoint container.

    bytes 0..7     magic  b"IBPCKPT\\0"
    bytes 8..11    manifest length L, little-endian uint32
    bytes 12..12+L UTF-8 JSON manifest
    rest           tensor payload, little-endian, in manifest order

The manifest carries ``format_version``, a ``kind`` ("training" or
"dataset"), free-form ``state`` and a tensor directory of
(name, shape, dtype, offset, length) with offsets relative to the payload.
The same container stores networks with optimizer state and synthetic datasets.
"""

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from config.settings import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from data_loader.dataset import Dataset
from engine.optimizer import AdamState
from net.layers import ArchConfig
from net.network import Network, build
from storage.json_writer import atomic_write
from utils.exceptions import CheckpointError
from utils.logger import get_logger

logger = get_logger("CHECKPOINT")

_HEADER = struct.Struct("<I")
_DTYPES = ("float32", "float64", "int64", "uint8")


def write_container(path, kind: str, state: dict, tensors: dict) -> Path:
    directory, chunks, offset = [], [], 0
    for name, array in tensors.items():
        array = np.ascontiguousarray(array)
        if array.dtype.name not in _DTYPES:
            raise CheckpointError(f"Cannot store tensor {name} of dtype {array.dtype}")
        raw = array.astype(array.dtype.newbyteorder("<"), copy=False).tobytes()
        directory.append({
            "name": name,
            "shape": list(array.shape),
            "dtype": array.dtype.name,
            "offset": offset,
            "length": len(raw),
        })
        chunks.append(raw)
        offset += len(raw)

    manifest = {
        "format_version": CHECKPOINT_VERSION,
        "kind": kind,
        "state": state,
        "tensors": directory,
    }
    encoded = json.dumps(manifest, sort_keys=True).encode("utf-8")
    blob = CHECKPOINT_MAGIC + _HEADER.pack(len(encoded)) + encoded + b"".join(chunks)
    return atomic_write(path, blob)


def read_container(path, kind: str | None = None) -> tuple:
    """Return (manifest, {name: ndarray}); nothing is returned unless the whole file checks out"""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError as e:
        raise CheckpointError(f"Checkpoint not found: {path}") from e

    magic_len = len(CHECKPOINT_MAGIC)
    if raw[:magic_len] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:magic_len]!r}")
    if len(raw) < magic_len + _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")

    (length,) = _HEADER.unpack_from(raw, magic_len)
    start = magic_len + _HEADER.size
    if len(raw) < start + length:
        raise CheckpointError(f"{path}: truncated manifest ({len(raw) - start} of {length} bytes)")
    try:
        manifest = json.loads(raw[start:start + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable manifest ({e})") from e

    version = manifest.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: format version {version}, this build reads {CHECKPOINT_VERSION}")
    if kind is not None and manifest.get("kind") != kind:
        raise CheckpointError(f"{path}: holds a '{manifest.get('kind')}' container, expected '{kind}'")

    payload = raw[start + length:]
    tensors = {}
    for entry in manifest["tensors"]:
        end = entry["offset"] + entry["length"]
        if end > len(payload):
            raise CheckpointError(f"{path}: truncated payload at tensor {entry['name']}")
        dtype = np.dtype(entry["dtype"]).newbyteorder("<")
        array = np.frombuffer(payload, dtype=dtype, count=entry["length"] // dtype.itemsize, offset=entry["offset"])
        tensors[entry["name"]] = array.astype(dtype.newbyteorder("="), copy=True).reshape(entry["shape"])
    expected = sum(entry["length"] for entry in manifest["tensors"])
    if len(payload) != expected:
        raise CheckpointError(f"{path}: payload is {len(payload)} bytes, manifest lists {expected}")
    return manifest, tensors


# -------------------------
# Training checkpoints
# -------------------------

@dataclass
class TrainingCheckpoint:
    net: Network
    adam: AdamState
    state: dict = field(default_factory=dict)


def save_checkpoint(path, net: Network, adam: AdamState, state: dict | None = None) -> Path:
    tensors = {}
    for name, value in net.params.items():
        tensors[f"param/{name}"] = value
    for name, value in net.buffers.items():
        tensors[f"buffer/{name}"] = value
    for name in net.params:
        tensors[f"adam.m/{name}"] = adam.m[name]
        tensors[f"adam.v/{name}"] = adam.v[name]

    payload_state = {
        "arch": net.arch,
        "dtype": np.dtype(net.dtype).name,
        "calibrated": net.calibrated,
        "adam": {"step": adam.step, "beta1": adam.beta1, "beta2": adam.beta2, "eps": adam.eps},
        "train": state or {},
    }
    path = write_container(path, "training", payload_state, tensors)
    logger.info(f"Checkpoint saved: {path}")
    return path


def load_checkpoint(path) -> TrainingCheckpoint:
    manifest, tensors = read_container(path, kind="training")
    state = manifest["state"]
    try:
        net = build(ArchConfig.model_validate(state["arch"]), dtype=state["dtype"])
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"{path}: architecture in manifest does not build ({e})") from e

    def section(prefix: str, names) -> dict:
        out = {}
        for name in names:
            key = f"{prefix}/{name}"
            if key not in tensors:
                raise CheckpointError(f"{path}: missing tensor {key}")
            out[name] = tensors[key]
        return out

    params = section("param", net.params)
    buffers = section("buffer", net.buffers)
    try:
        adam_cfg = state["adam"]
        adam = AdamState(
            m=section("adam.m", net.params),
            v=section("adam.v", net.params),
            step=int(adam_cfg["step"]),
            beta1=adam_cfg["beta1"],
            beta2=adam_cfg["beta2"],
            eps=adam_cfg["eps"],
        )
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"{path}: optimizer state is missing or malformed ({e})") from e
    for name, value in params.items():
        if value.shape != net.params[name].shape:
            raise CheckpointError(f"{path}: tensor {name} has shape {value.shape}, network expects {net.params[name].shape}")

    net = replace(net, params=params, buffers=buffers, calibrated=bool(state.get("calibrated", False)))
    logger.info(f"Checkpoint loaded: {path} (adam step {adam.step})")
    return TrainingCheckpoint(net=net, adam=adam, state=state.get("train", {}))


# -------------------------
# Datasets
# -------------------------

def save_dataset(path, ds: Dataset) -> Path:
    state = {
        "num_classes": ds.num_classes,
        "split": ds.split,
        "mean": list(ds.mean),
        "std": list(ds.std),
        "clip": list(ds.clip),
        "meta": ds.meta,
    }
    return write_container(path, "dataset", state, {"images": ds.images, "labels": ds.labels})


def load_dataset(path) -> Dataset:
    manifest, tensors = read_container(path, kind="dataset")
    for name in ("images", "labels"):
        if name not in tensors:
            raise CheckpointError(f"{path}: missing tensor {name}")
    try:
        state = manifest["state"]
        return Dataset(
            images=tensors["images"],
            labels=tensors["labels"],
            num_classes=state["num_classes"],
            split=state["split"],
            mean=tuple(state["mean"]),
            std=tuple(state["std"]),
            clip=tuple(state["clip"]),
            meta=state["meta"],
        )
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"{path}: dataset state is missing or malformed ({e})") from e
