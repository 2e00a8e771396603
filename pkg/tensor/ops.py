"""
Dense tensor primitives on top of numpy arrays.

Every tensor in the toolkit is a plain ``numpy.ndarray`` in float32 or
float64. The functions here add the shape checks and the deterministic
summation order the rest of the code relies on:

* ``matmul`` accumulates rank-1 updates in a fixed inner-index order when the
  inner dimension is small (at most ``EXACT_MATMUL_MAX_INNER``), which makes
  it bit-identical to a naive triple loop. Larger products go to BLAS, which
  is deterministic for a fixed build and thread count.
* ``conv2d`` is im2col followed by ``matmul``; the column order is
  (channel, kernel row, kernel column), the same as ``kernel.reshape(c_out, -1)``.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from config.settings import EXACT_MATMUL_MAX_INNER
from utils.exceptions import ArgumentError, DimensionError

_REDUCERS = {
    "mean": np.mean,
    "sum": np.sum,
    "max": np.max,
    "min": np.min,
}


# -------------------------
# Linear algebra
# -------------------------

def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs at least 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    try:
        batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError as e:
        raise DimensionError(f"matmul batch dimensions do not broadcast: {a.shape} @ {b.shape}") from e

    if a.shape[-1] > EXACT_MATMUL_MAX_INNER:
        return np.matmul(a, b)

    out = np.zeros(batch + (a.shape[-2], b.shape[-1]), dtype=np.result_type(a, b))
    for p in range(a.shape[-1]):
        out += a[..., :, p:p + 1] * b[..., p:p + 1, :]
    return out


def conv_output_size(size: int, kernel_size: int, stride: int, padding: int) -> int:
    if kernel_size < 1 or stride < 1 or padding < 0:
        raise ArgumentError(
            f"Invalid conv geometry: kernel={kernel_size}, stride={stride}, padding={padding}"
        )
    span = size + 2 * padding - kernel_size
    if span < 0 or span % stride != 0:
        raise DimensionError(
            f"Non-integral conv output: ({size}+2*{padding}-{kernel_size})/{stride}+1"
        )
    return span // stride + 1


def im2col(x: np.ndarray, kernel_size: int, stride: int, padding: int):
    """(N, C, H, W) -> columns (N*H'*W', C*k*k) plus the output size (H', W')"""
    if x.ndim != 4:
        raise DimensionError(f"conv input must be N x C x H x W, got {x.shape}")
    n, c, h, w = x.shape
    out_h = conv_output_size(h, kernel_size, stride, padding)
    out_w = conv_output_size(w, kernel_size, stride, padding)

    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))

    windows = sliding_window_view(x, (kernel_size, kernel_size), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * kernel_size * kernel_size)
    return cols, out_h, out_w


def col2im(cols: np.ndarray, x_shape, kernel_size: int, stride: int, padding: int) -> np.ndarray:
    """Adjoint of im2col: scatter-add columns back into an (N, C, H, W) array"""
    n, c, h, w = x_shape
    out_h = conv_output_size(h, kernel_size, stride, padding)
    out_w = conv_output_size(w, kernel_size, stride, padding)
    k = kernel_size

    cols = cols.reshape(n, out_h, out_w, c, k, k).transpose(0, 3, 4, 5, 1, 2)
    padded = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            padded[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += cols[:, :, i, j]
    return padded[:, :, padding:padding + h, padding:padding + w]


def conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray | None = None,
           stride: int = 1, padding: int = 0) -> np.ndarray:
    if kernel.ndim != 4 or kernel.shape[2] != kernel.shape[3]:
        raise DimensionError(f"kernel must be C_out x C_in x k x k, got {kernel.shape}")
    if x.ndim != 4 or x.shape[1] != kernel.shape[1]:
        raise DimensionError(f"conv input {x.shape} does not match kernel {kernel.shape}")
    c_out, _, k, _ = kernel.shape

    cols, out_h, out_w = im2col(x, k, stride, padding)
    out = matmul(cols, kernel.reshape(c_out, -1).T)
    if bias is not None:
        if bias.shape != (c_out,):
            raise DimensionError(f"bias shape {bias.shape} does not match {c_out} output channels")
        out = out + bias
    n = x.shape[0]
    return np.ascontiguousarray(out.reshape(n, out_h, out_w, c_out).transpose(0, 3, 1, 2))


# -------------------------
# Reductions
# -------------------------

def normalize_axes(ndim: int, axes) -> tuple:
    if axes is None:
        return tuple(range(ndim))
    if isinstance(axes, (int, np.integer)):
        axes = (axes,)
    normalized = []
    for axis in axes:
        if not -ndim <= axis < ndim:
            raise DimensionError(f"Axis {axis} out of range for a {ndim}-D tensor")
        axis = int(axis) % ndim
        if axis in normalized:
            raise DimensionError(f"Axis {axis} listed twice")
        normalized.append(axis)
    return tuple(sorted(normalized))


def reduce(t: np.ndarray, op: str, axes=None, keepdims: bool = False) -> np.ndarray:
    """Reduction over ``axes`` (all when None); an empty extent is an error"""
    if op not in _REDUCERS:
        raise ArgumentError(f"Unknown reduction '{op}', expected one of {sorted(_REDUCERS)}")
    t = np.asarray(t)
    axes = normalize_axes(t.ndim, axes)
    extent = int(np.prod([t.shape[a] for a in axes], dtype=np.int64))
    if extent == 0 or t.size == 0:
        raise DimensionError(f"Reduction '{op}' over an empty extent of a {t.shape} tensor")
    return _REDUCERS[op](t, axis=axes, keepdims=keepdims)
