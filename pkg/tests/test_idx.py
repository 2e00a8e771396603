import gzip
import struct

import numpy as np
import pytest

from config.models import DataConfig
from data_loader.idx import load_mnist_idx, read_idx_images, read_idx_labels
from data_loader.loader import DatasetLoader, mnist_paths
from utils.exceptions import ConfigError, ParseError


def image_bytes(pixels, magic=2051):
    n, rows, cols = pixels.shape
    return struct.pack(">4I", magic, n, rows, cols) + pixels.astype(np.uint8).tobytes()


def label_bytes(labels, magic=2049):
    return struct.pack(">2I", magic, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes()


@pytest.fixture
def pixels():
    return np.arange(3 * 4 * 5, dtype=np.uint8).reshape(3, 4, 5) * 4


def write(path, data):
    path.write_bytes(data)
    return path


def test_reads_images_and_labels(tmp_path, pixels):
    images = read_idx_images(write(tmp_path / "img", image_bytes(pixels)))
    assert images.shape == (3, 1, 4, 5)
    assert np.array_equal(images[:, 0], pixels)
    labels = read_idx_labels(write(tmp_path / "lbl", label_bytes([0, 9, 4])))
    assert labels.tolist() == [0, 9, 4]
    assert labels.dtype == np.int64


def test_gzip_files(tmp_path, pixels):
    path = tmp_path / "img.gz"
    with gzip.open(path, "wb") as f:
        f.write(image_bytes(pixels))
    assert read_idx_images(path).shape == (3, 1, 4, 5)


def test_scaling_to_unit_interval(tmp_path):
    pixels = np.array([[[0, 255]]], dtype=np.uint8)
    ds = load_mnist_idx(write(tmp_path / "img", image_bytes(pixels)), write(tmp_path / "lbl", label_bytes([3])))
    assert ds.images.dtype == np.float32
    assert ds.images[0, 0, 0].tolist() == [0.0, 1.0]
    assert ds.num_classes == 10
    assert ds.mean == (0.1307,)


def test_bad_magic_reports_offset_zero(tmp_path, pixels):
    with pytest.raises(ParseError) as info:
        read_idx_images(write(tmp_path / "img", image_bytes(pixels, magic=2049)))
    assert info.value.offset == 0
    with pytest.raises(ParseError):
        read_idx_labels(write(tmp_path / "lbl", label_bytes([1], magic=2051)))


def test_truncated_files(tmp_path, pixels):
    raw = image_bytes(pixels)
    with pytest.raises(ParseError) as info:
        read_idx_images(write(tmp_path / "img", raw[:-1]))
    assert info.value.offset == len(raw) - 1
    with pytest.raises(ParseError):
        read_idx_images(write(tmp_path / "short", raw[:10]))
    with pytest.raises(ParseError):
        read_idx_labels(write(tmp_path / "lbl", label_bytes([1, 2, 3])[:-2]))


def test_label_out_of_range_offset(tmp_path):
    with pytest.raises(ParseError) as info:
        read_idx_labels(write(tmp_path / "lbl", label_bytes([1, 2, 10, 3])))
    assert info.value.offset == 8 + 2


def test_count_mismatch(tmp_path, pixels):
    with pytest.raises(ParseError):
        load_mnist_idx(write(tmp_path / "img", image_bytes(pixels)), write(tmp_path / "lbl", label_bytes([1, 2])))


def write_mnist_dir(directory, n_train=6, n_test=4):
    gen = np.random.default_rng(0)
    for prefix, n in (("train", n_train), ("t10k", n_test)):
        write(directory / f"{prefix}-images-idx3-ubyte", image_bytes(gen.integers(0, 256, (n, 28, 28))))
        write(directory / f"{prefix}-labels-idx1-ubyte", label_bytes(gen.integers(0, 10, n)))


def test_loader_reads_mnist_directory(tmp_path):
    write_mnist_dir(tmp_path)
    train, test = DatasetLoader(DataConfig(kind="mnist", mnist_dir=tmp_path, train_limit=5)).load()
    assert len(train) == 5 and len(test) == 4
    assert train.input_shape == (1, 28, 28)
    assert train.std == (0.3081,)


def test_missing_mnist_file_is_a_config_error(tmp_path):
    write_mnist_dir(tmp_path)
    (tmp_path / "t10k-labels-idx1-ubyte").unlink()
    with pytest.raises(ConfigError):
        mnist_paths(tmp_path)
    with pytest.raises(ConfigError):
        DatasetLoader(DataConfig(kind="mnist", mnist_dir=tmp_path)).check_paths()
