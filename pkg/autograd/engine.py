"""
Reverse-mode differentiation over numpy arrays.

A ``Variable`` is one node of the tape: its value, the nodes it was computed
from, and a closure that pushes the node's gradient back into them. Nodes get
a monotonically increasing id at construction, so sorting the reachable nodes
by id (descending) is a valid reverse topological order.

Masks that split a computation (ReLU gates, sign splits of weights, the
``minimum`` branch selection) are evaluated on the forward values and held
constant in the backward pass. ReLU uses subgradient 0 at exactly 0, and
``minimum`` sends the gradient to its first operand on ties.
"""

import itertools

import numpy as np

from tensor import ops
from utils.exceptions import ContractError, DimensionError, UnsupportedOpError

_node_ids = itertools.count()


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``"""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _expand_reduced(grad: np.ndarray, shape: tuple, axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        grad = np.expand_dims(grad, ops.normalize_axes(len(shape), axis))
    return np.broadcast_to(grad, shape)


class Variable:

    # numpy ufuncs on a Variable raise TypeError; ndarray (op) Variable falls back to our reflected ops
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: str | None = None,
                 parents: tuple = (), op: str = "leaf"):
        self.data = np.asarray(data)
        self.requires_grad = requires_grad
        self.name = name
        self.parents = tuple(parents)
        self.op = op
        self.grad = None
        self._backward = None
        self._id = next(_node_ids)

    # -------------------------
    # Helpers
    # -------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    def _lift(self, other) -> "Variable":
        if isinstance(other, Variable):
            return other
        return Variable(np.asarray(other, dtype=self.data.dtype))

    @staticmethod
    def _result(data, parents, op) -> "Variable":
        return Variable(data, requires_grad=any(p.requires_grad for p in parents),
                        parents=parents, op=op)

    def _accumulate(self, grad: np.ndarray):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad = self.grad + grad

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        return f"Variable(op={self.op}, shape={self.data.shape}, dtype={self.data.dtype}, name={self.name})"

    # -------------------------
    # Arithmetic
    # -------------------------

    def __add__(self, other):
        other = self._lift(other)
        out = self._result(self.data + other.data, (self, other), "add")

        def _backward():
            self._accumulate(_unbroadcast(out.grad, self.shape))
            other._accumulate(_unbroadcast(out.grad, other.shape))
        out._backward = _backward
        return out

    def __radd__(self, other):
        return self._lift(other) + self

    def __sub__(self, other):
        other = self._lift(other)
        out = self._result(self.data - other.data, (self, other), "sub")

        def _backward():
            self._accumulate(_unbroadcast(out.grad, self.shape))
            other._accumulate(_unbroadcast(-out.grad, other.shape))
        out._backward = _backward
        return out

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out = self._result(self.data * other.data, (self, other), "mul")

        def _backward():
            self._accumulate(_unbroadcast(out.grad * other.data, self.shape))
            other._accumulate(_unbroadcast(out.grad * self.data, other.shape))
        out._backward = _backward
        return out

    def __rmul__(self, other):
        return self._lift(other) * self

    def __truediv__(self, other):
        other = self._lift(other)
        out = self._result(self.data / other.data, (self, other), "div")

        def _backward():
            self._accumulate(_unbroadcast(out.grad / other.data, self.shape))
            other._accumulate(_unbroadcast(-out.grad * self.data / (other.data * other.data), other.shape))
        out._backward = _backward
        return out

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __neg__(self):
        out = self._result(-self.data, (self,), "neg")

        def _backward():
            self._accumulate(-out.grad)
        out._backward = _backward
        return out

    def __pow__(self, exponent: float):
        if isinstance(exponent, Variable):
            raise UnsupportedOpError("Only constant exponents are supported")
        out = self._result(self.data ** exponent, (self,), f"pow{exponent}")

        def _backward():
            self._accumulate(out.grad * exponent * self.data ** (exponent - 1))
        out._backward = _backward
        return out

    def __matmul__(self, other):
        other = self._lift(other)
        out = self._result(ops.matmul(self.data, other.data), (self, other), "matmul")

        def _backward():
            g = out.grad
            if self.requires_grad:
                self._accumulate(_unbroadcast(ops.matmul(g, np.swapaxes(other.data, -1, -2)), self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(ops.matmul(np.swapaxes(self.data, -1, -2), g), other.shape))
        out._backward = _backward
        return out

    def __rmatmul__(self, other):
        return self._lift(other) @ self

    # -------------------------
    # Shape
    # -------------------------

    @property
    def mT(self):
        out = self._result(np.swapaxes(self.data, -1, -2), (self,), "transpose")

        def _backward():
            self._accumulate(np.swapaxes(out.grad, -1, -2))
        out._backward = _backward
        return out

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        try:
            value = self.data.reshape(shape)
        except ValueError as e:
            raise DimensionError(f"Cannot reshape {self.shape} into {shape}") from e
        out = self._result(value, (self,), "reshape")

        def _backward():
            self._accumulate(out.grad.reshape(self.shape))
        out._backward = _backward
        return out

    # -------------------------
    # Reductions
    # -------------------------

    def sum(self, axis=None, keepdims: bool = False):
        if axis is not None:
            axis = ops.normalize_axes(self.ndim, axis)
        out = self._result(ops.reduce(self.data, "sum", axis, keepdims), (self,), "sum")

        def _backward():
            self._accumulate(_expand_reduced(out.grad, self.shape, axis, keepdims))
        out._backward = _backward
        return out

    def mean(self, axis=None, keepdims: bool = False):
        axes = ops.normalize_axes(self.ndim, axis)
        count = int(np.prod([self.shape[a] for a in axes], dtype=np.int64))
        if count == 0:
            raise DimensionError(f"mean over an empty extent of a {self.shape} tensor")
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def logsumexp(self, axis=-1, keepdims: bool = False):
        axes = ops.normalize_axes(self.ndim, axis)
        peak = ops.reduce(self.data, "max", axes, keepdims=True)
        value = peak + np.log(np.sum(np.exp(self.data - peak), axis=axes, keepdims=True))
        out = self._result(value if keepdims else np.squeeze(value, axis=axes), (self,), "logsumexp")

        def _backward():
            g = out.grad if keepdims else np.expand_dims(out.grad, axes)
            self._accumulate(g * np.exp(self.data - value))
        out._backward = _backward
        return out

    # -------------------------
    # Elementwise
    # -------------------------

    def relu(self):
        mask = self.data > 0
        out = self._result(np.where(mask, self.data, 0).astype(self.dtype, copy=False), (self,), "relu")

        def _backward():
            self._accumulate(out.grad * mask)
        out._backward = _backward
        return out

    def neg_part(self):
        """min(x, 0), the complement of relu in a sign split"""
        mask = self.data < 0
        out = self._result(np.where(mask, self.data, 0).astype(self.dtype, copy=False), (self,), "neg_part")

        def _backward():
            self._accumulate(out.grad * mask)
        out._backward = _backward
        return out

    def exp(self):
        value = np.exp(self.data)
        out = self._result(value, (self,), "exp")

        def _backward():
            self._accumulate(out.grad * value)
        out._backward = _backward
        return out

    def log(self):
        out = self._result(np.log(self.data), (self,), "log")

        def _backward():
            self._accumulate(out.grad / self.data)
        out._backward = _backward
        return out

    def sqrt(self):
        value = np.sqrt(self.data)
        out = self._result(value, (self,), "sqrt")

        def _backward():
            self._accumulate(out.grad * 0.5 / value)
        out._backward = _backward
        return out

    def softplus(self):
        value = np.logaddexp(0, self.data).astype(self.dtype, copy=False)
        out = self._result(value, (self,), "softplus")

        def _backward():
            self._accumulate(out.grad * np.exp(self.data - value))
        out._backward = _backward
        return out

    def minimum(self, other):
        other = self._lift(other)
        first = self.data <= other.data
        out = self._result(np.where(first, self.data, other.data), (self, other), "minimum")

        def _backward():
            self._accumulate(_unbroadcast(out.grad * first, self.shape))
            other._accumulate(_unbroadcast(out.grad * ~first, other.shape))
        out._backward = _backward
        return out


def conv2d(x: Variable, kernel: Variable, bias: Variable | None = None,
           stride: int = 1, padding: int = 0) -> Variable:
    value = ops.conv2d(x.data, kernel.data, None if bias is None else bias.data, stride, padding)
    c_out, _, k, _ = kernel.shape
    weight = kernel.data.reshape(c_out, -1)

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    out = Variable._result(value, parents, "conv2d")

    def _backward():
        g = out.grad.transpose(0, 2, 3, 1).reshape(-1, c_out)
        if kernel.requires_grad:
            cols, _, _ = ops.im2col(x.data, k, stride, padding)
            kernel._accumulate(ops.matmul(g.T, cols).reshape(kernel.shape))
        if bias is not None and bias.requires_grad:
            bias._accumulate(g.sum(axis=0))
        if x.requires_grad:
            x._accumulate(ops.col2im(ops.matmul(g, weight), x.shape, k, stride, padding))
    out._backward = _backward
    return out


def parameter(data, name: str) -> Variable:
    return Variable(np.asarray(data), requires_grad=True, name=name)


# -------------------------
# Tape recording and backward
# -------------------------

class GradientSet(dict):
    """Parameter name -> gradient array of the parameter's shape"""


def record(fn, *inputs):
    """
    Evaluate ``fn`` on taped inputs and return (value, root node).

    Plain arrays among ``inputs`` become named leaves ``input0``, ``input1``...
    """
    leaves = [
        x if isinstance(x, Variable) else Variable(np.asarray(x), requires_grad=True, name=f"input{i}")
        for i, x in enumerate(inputs)
    ]
    try:
        root = fn(*leaves)
    except UnsupportedOpError:
        raise
    except TypeError as e:
        raise UnsupportedOpError(f"Untaped primitive inside recorded computation: {e}") from e
    if not isinstance(root, Variable):
        raise UnsupportedOpError(f"Recorded computation returned {type(root).__name__}, not a Variable")
    return root.data, root


def _reachable(root: Variable) -> list:
    seen = {id(root): root}
    stack = [root]
    while stack:
        node = stack.pop()
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in seen:
                seen[id(parent)] = parent
                stack.append(parent)
    return sorted(seen.values(), key=lambda v: v._id, reverse=True)


def backward(root: Variable, seed_grad: float = 1.0, params: dict | None = None) -> GradientSet:
    if root.data.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {root.shape}")

    order = _reachable(root)
    for node in order:
        node.grad = None
    root.grad = np.full_like(root.data, seed_grad)

    for node in order:
        if node.grad is not None and node._backward is not None:
            node._backward()

    grads = GradientSet()
    for node in order:
        if node.name is not None and not node.parents and node.requires_grad:
            grads[node.name] = node.grad if node.grad is not None else np.zeros_like(node.data)
    for name, param in (params or {}).items():
        if name not in grads:
            grads[name] = np.zeros_like(param.data)
    return grads
