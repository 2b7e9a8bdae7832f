"""Differentiable numeric primitives with exact-shape contracts.

This module implements a small reverse-mode automatic differentiation engine
over numpy arrays. Each operation returns a :class:`Tensor` that remembers its
parents and a closure propagating the upstream gradient to them; calling
:meth:`Tensor.backward` on a scalar walks the graph in reverse topological
order. Every higher-level module (model, cpc, semisup) is written in terms of
the operations defined here.

Training runs in float32; gradient verification uses float64 through
:func:`grad_check`, a central-difference oracle.

DOMAINS: ['autograd', 'tensor', 'optimizer']
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .constants import ADAM_EPSILON, BN_EPSILON, BN_MOMENTUM
from .exceptions import SplurgeSqcpcNumericError, SplurgeSqcpcShapeError, SplurgeSqcpcValueError

logger = logging.getLogger(__name__)

ActivationKind = Literal["sigmoid", "tanh", "relu"]
NormMode = Literal["train", "eval"]

BackwardFn = Callable[[np.ndarray], None]


class Tensor:
    """An n-dimensional float array that records how it was computed.

    Args:
        data: Array-like values. Non-float input is converted to float64.
        requires_grad: Whether gradients should be accumulated into ``grad``.

    Raises:
        SplurgeSqcpcNumericError: If any value is NaN or infinite.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(
        self,
        data: np.ndarray | float | Sequence[float],
        *,
        requires_grad: bool = False,
        _parents: tuple[Tensor, ...] = (),
        _op: str = "leaf",
    ) -> None:
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        _check_finite(arr, _op)
        self.data: np.ndarray = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward: BackwardFn | None = None
        self.op = _op

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise SplurgeSqcpcShapeError(
                message=f"item() requires a single element, got shape {self.shape}",
                error_code="not-scalar",
            )
        return float(self.data.reshape(-1)[0])

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate gradients of this tensor into every contributing leaf.

        Args:
            grad: Upstream gradient; defaults to ones for a single-element tensor.

        Raises:
            SplurgeSqcpcShapeError: If no gradient is given for a non-scalar tensor.
        """
        if grad is None:
            if self.data.size != 1:
                raise SplurgeSqcpcShapeError(
                    message=f"backward() without a gradient needs a scalar, got shape {self.shape}",
                    error_code="not-scalar",
                )
            grad = np.ones_like(self.data)
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(_topological_order(self)):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if grad.shape != self.data.shape:
            raise SplurgeSqcpcShapeError(
                message=f"gradient shape {grad.shape} does not match tensor shape {self.data.shape} ({self.op})",
                error_code="grad-shape",
            )
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def __add__(self, other: Tensor | float) -> Tensor:
        return add(self, other)

    def __radd__(self, other: float) -> Tensor:
        return add(self, other)

    def __sub__(self, other: Tensor | float) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: float) -> Tensor:
        return sub(_as_tensor(other, self.dtype), self)

    def __mul__(self, other: Tensor | float) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: float) -> Tensor:
        return mul(self, other)

    def __neg__(self) -> Tensor:
        return mul(self, -1.0)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op!r}, requires_grad={self.requires_grad})"


def _check_finite(data: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(data)):
        raise SplurgeSqcpcNumericError(
            message=f"non-finite values produced by {op}",
            error_code="non-finite",
            details={"op": op},
        )


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited and parent.requires_grad:
                stack.append((parent, False))
    return order


def _as_tensor(value: Tensor | float, dtype: np.dtype) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def _result(data: np.ndarray, parents: tuple[Tensor, ...], op: str, backward: BackwardFn) -> Tensor:
    out = Tensor(data, _parents=parents, _op=op)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _require_ndim(x: Tensor, ndim: int, name: str, op: str) -> None:
    if x.ndim != ndim:
        raise SplurgeSqcpcShapeError(
            message=f"{op}: {name} must have {ndim} dimensions, got shape {x.shape}",
            error_code="dimension-mismatch",
        )


# Elementwise arithmetic -------------------------------------------------


def add(a: Tensor, b: Tensor | float) -> Tensor:
    b = _as_tensor(b, a.dtype)

    def backward(grad: np.ndarray) -> None:
        a._accumulate(_unbroadcast(grad, a.shape))
        b._accumulate(_unbroadcast(grad, b.shape))

    return _result(a.data + b.data, (a, b), "add", backward)


def sub(a: Tensor, b: Tensor | float) -> Tensor:
    b = _as_tensor(b, a.dtype)

    def backward(grad: np.ndarray) -> None:
        a._accumulate(_unbroadcast(grad, a.shape))
        b._accumulate(_unbroadcast(-grad, b.shape))

    return _result(a.data - b.data, (a, b), "sub", backward)


def mul(a: Tensor, b: Tensor | float) -> Tensor:
    b = _as_tensor(b, a.dtype)

    def backward(grad: np.ndarray) -> None:
        a._accumulate(_unbroadcast(grad * b.data, a.shape))
        b._accumulate(_unbroadcast(grad * a.data, b.shape))

    return _result(a.data * b.data, (a, b), "mul", backward)


def square(x: Tensor) -> Tensor:
    def backward(grad: np.ndarray) -> None:
        x._accumulate(2.0 * x.data * grad)

    return _result(x.data * x.data, (x,), "square", backward)


def sum_all(x: Tensor) -> Tensor:
    def backward(grad: np.ndarray) -> None:
        x._accumulate(np.broadcast_to(grad, x.shape).astype(x.dtype, copy=True))

    return _result(np.asarray(x.data.sum(), dtype=x.dtype), (x,), "sum", backward)


def mean_all(x: Tensor) -> Tensor:
    if x.data.size == 0:
        raise SplurgeSqcpcShapeError(message="mean of an empty tensor", error_code="empty")
    return mul(sum_all(x), 1.0 / x.data.size)


# Structural operations ---------------------------------------------------


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        data = x.data.reshape(tuple(shape))
    except ValueError as exc:
        raise SplurgeSqcpcShapeError(
            message=f"cannot reshape {x.shape} into {tuple(shape)}",
            error_code="reshape",
        ) from exc

    def backward(grad: np.ndarray) -> None:
        x._accumulate(grad.reshape(x.shape))

    return _result(data, (x,), "reshape", backward)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(grad: np.ndarray) -> None:
        x._accumulate(np.ascontiguousarray(grad.transpose(inverse)))

    return _result(np.ascontiguousarray(x.data.transpose(axes)), (x,), "transpose", backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise SplurgeSqcpcShapeError(message="concat of an empty sequence", error_code="empty")
    parts = tuple(tensors)
    try:
        data = np.concatenate([t.data for t in parts], axis=axis)
    except ValueError as exc:
        raise SplurgeSqcpcShapeError(
            message=f"concat: incompatible shapes {[t.shape for t in parts]} along axis {axis}",
            error_code="dimension-mismatch",
        ) from exc
    bounds = np.cumsum([t.shape[axis] for t in parts])[:-1]

    def backward(grad: np.ndarray) -> None:
        for part, piece in zip(parts, np.split(grad, bounds, axis=axis), strict=True):
            part._accumulate(np.ascontiguousarray(piece))

    return _result(data, parts, "concat", backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = [reshape(t, t.shape[:axis] + (1,) + t.shape[axis:]) for t in tensors]
    return concat(parts, axis=axis)


def take_rows(x: Tensor, start: int, stop: int) -> Tensor:
    """Slice ``x[start:stop]`` along the leading axis."""
    if not 0 <= start <= stop <= x.shape[0]:
        raise SplurgeSqcpcShapeError(
            message=f"take_rows: [{start}:{stop}] out of range for leading extent {x.shape[0]}",
            error_code="index-range",
        )

    def backward(grad: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        full[start:stop] = grad
        x._accumulate(full)

    return _result(x.data[start:stop].copy(), (x,), "take_rows", backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _require_ndim(a, 2, "a", "matmul")
    _require_ndim(b, 2, "b", "matmul")
    if a.shape[1] != b.shape[0]:
        raise SplurgeSqcpcShapeError(
            message=f"matmul: inner dimensions differ, {a.shape} @ {b.shape}",
            error_code="dimension-mismatch",
        )

    def backward(grad: np.ndarray) -> None:
        a._accumulate(grad @ b.data.T)
        b._accumulate(a.data.T @ grad)

    return _result(a.data @ b.data, (a, b), "matmul", backward)


# Network primitives ------------------------------------------------------


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation over a batch of feature maps.

    Args:
        x: Input of shape [B, Cin, H, W] (a single [Cin, H, W] map is accepted).
        weight: Kernel of shape [Cout, Cin, kh, kw].
        bias: Per-output-channel bias of shape [Cout].
        stride: Step between kernel applications, at least 1.
        padding: Zero padding added on every spatial border.

    Returns:
        Tensor of shape [B, Cout, H', W'] with H' = floor((H + 2p - kh) / stride) + 1.

    Raises:
        SplurgeSqcpcShapeError: If dimensions disagree or the kernel does not fit.
    """
    if x.ndim == 3:
        out = conv2d(reshape(x, (1,) + x.shape), weight, bias, stride, padding)
        return reshape(out, out.shape[1:])
    _require_ndim(x, 4, "input", "conv2d")
    _require_ndim(weight, 4, "weight", "conv2d")
    _require_ndim(bias, 1, "bias", "conv2d")
    _, c_in, height, width = x.shape
    c_out, w_in, kh, kw = weight.shape
    if w_in != c_in:
        raise SplurgeSqcpcShapeError(
            message=f"conv2d: input has {c_in} channels but weight expects {w_in}",
            error_code="dimension-mismatch",
        )
    if bias.shape[0] != c_out:
        raise SplurgeSqcpcShapeError(
            message=f"conv2d: bias has {bias.shape[0]} entries for {c_out} output channels",
            error_code="dimension-mismatch",
        )
    if stride < 1 or padding < 0:
        raise SplurgeSqcpcValueError(
            message=f"conv2d: stride must be >= 1 and padding >= 0, got {stride}, {padding}",
            error_code="invalid-value",
        )
    if kh > height + 2 * padding or kw > width + 2 * padding:
        raise SplurgeSqcpcShapeError(
            message=f"conv2d: kernel {kh}x{kw} larger than padded input {height + 2 * padding}x{width + 2 * padding}",
            error_code="kernel-too-large",
        )

    if kh == 1 and kw == 1 and stride == 1 and padding == 0:
        w2 = weight.data[:, :, 0, 0]
        data = np.einsum("bchw,oc->bohw", x.data, w2, optimize=True) + bias.data[None, :, None, None]

        def backward_1x1(grad: np.ndarray) -> None:
            x._accumulate(np.einsum("bohw,oc->bchw", grad, w2, optimize=True))
            weight._accumulate(np.einsum("bchw,bohw->oc", x.data, grad, optimize=True)[:, :, None, None])
            bias._accumulate(grad.sum(axis=(0, 2, 3)))

        return _result(data, (x, weight, bias), "conv2d", backward_1x1)

    padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = windows.shape[2], windows.shape[3]
    data = np.einsum("bchwij,ocij->bohw", windows, weight.data, optimize=True) + bias.data[None, :, None, None]

    def backward(grad: np.ndarray) -> None:
        weight._accumulate(np.einsum("bchwij,bohw->ocij", windows, grad, optimize=True))
        bias._accumulate(grad.sum(axis=(0, 2, 3)))
        if not x.requires_grad:
            return
        grad_padded = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                grad_padded[:, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride] += np.einsum(
                    "bohw,oc->bchw", grad, weight.data[:, :, i, j], optimize=True
                )
        x._accumulate(grad_padded[:, :, padding : padding + height, padding : padding + width])

    return _result(data, (x, weight, bias), "conv2d", backward)


def activation(x: Tensor, kind: ActivationKind) -> Tensor:
    """Elementwise sigmoid, tanh or relu (subgradient 0 at the relu kink)."""
    if kind == "sigmoid":
        s = expit(x.data)

        def backward_sigmoid(grad: np.ndarray) -> None:
            x._accumulate(grad * s * (1.0 - s))

        return _result(s, (x,), "sigmoid", backward_sigmoid)
    if kind == "tanh":
        t = np.tanh(x.data)

        def backward_tanh(grad: np.ndarray) -> None:
            x._accumulate(grad * (1.0 - t * t))

        return _result(t, (x,), "tanh", backward_tanh)
    if kind == "relu":
        mask = x.data > 0

        def backward_relu(grad: np.ndarray) -> None:
            x._accumulate(grad * mask)

        return _result(x.data * mask, (x,), "relu", backward_relu)
    raise SplurgeSqcpcValueError(message=f"unknown activation kind: {kind!r}", error_code="invalid-activation")


def global_avg_pool(x: Tensor) -> Tensor:
    """Average over the two trailing spatial axes: [.., C, H, W] -> [.., C]."""
    if x.ndim < 3:
        raise SplurgeSqcpcShapeError(
            message=f"global_avg_pool expects [C, H, W] or [B, C, H, W], got {x.shape}",
            error_code="dimension-mismatch",
        )
    height, width = x.shape[-2], x.shape[-1]
    if height * width == 0:
        raise SplurgeSqcpcShapeError(message="global_avg_pool over an empty spatial extent", error_code="empty")
    area = float(height * width)

    def backward(grad: np.ndarray) -> None:
        x._accumulate(np.broadcast_to(grad[..., None, None] / area, x.shape).astype(x.dtype, copy=True))

    return _result(x.data.mean(axis=(-2, -1)), (x,), "global_avg_pool", backward)


@dataclass(frozen=True)
class BatchNormState:
    """Running statistics of a batch-norm layer, passed explicitly in and out."""

    running_mean: np.ndarray
    running_var: np.ndarray

    @classmethod
    def initial(cls, features: int, dtype: np.dtype | type = np.float32) -> BatchNormState:
        return cls(np.zeros(features, dtype=dtype), np.ones(features, dtype=dtype))


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: BatchNormState,
    mode: NormMode,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPSILON,
) -> tuple[Tensor, BatchNormState]:
    """Per-feature normalization of a [B, F] batch followed by scale and shift.

    In ``train`` mode the batch statistics normalize the input and the running
    statistics are blended towards them with ``momentum``; in ``eval`` mode the
    running statistics are used and returned unchanged.

    Raises:
        SplurgeSqcpcShapeError: On shape mismatch or when B < 2 in train mode.
    """
    _require_ndim(x, 2, "input", "batch_norm")
    batch, features = x.shape
    if gamma.shape != (features,) or beta.shape != (features,) or state.running_mean.shape != (features,):
        raise SplurgeSqcpcShapeError(
            message=f"batch_norm: parameters must have shape ({features},)",
            error_code="dimension-mismatch",
        )
    if mode == "train":
        if batch < 2:
            raise SplurgeSqcpcShapeError(
                message=f"batch_norm in train mode needs a batch of at least 2, got {batch}",
                error_code="batch-too-small",
            )
        mu = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mu) * inv_std
        unbiased = var * (batch / (batch - 1))
        new_state = BatchNormState(
            ((1.0 - momentum) * state.running_mean + momentum * mu).astype(state.running_mean.dtype),
            ((1.0 - momentum) * state.running_var + momentum * unbiased).astype(state.running_var.dtype),
        )

        def backward_train(grad: np.ndarray) -> None:
            gamma._accumulate((grad * xhat).sum(axis=0))
            beta._accumulate(grad.sum(axis=0))
            dxhat = grad * gamma.data
            x._accumulate(
                (inv_std / batch)
                * (batch * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
            )

        out = _result(xhat * gamma.data + beta.data, (x, gamma, beta), "batch_norm", backward_train)
        return out, new_state
    if mode == "eval":
        inv_std = 1.0 / np.sqrt(state.running_var + eps)
        xhat = (x.data - state.running_mean) * inv_std

        def backward_eval(grad: np.ndarray) -> None:
            gamma._accumulate((grad * xhat).sum(axis=0))
            beta._accumulate(grad.sum(axis=0))
            x._accumulate(grad * gamma.data * inv_std)

        out = _result(
            (xhat * gamma.data + beta.data).astype(x.dtype), (x, gamma, beta), "batch_norm", backward_eval
        )
        return out, state
    raise SplurgeSqcpcValueError(message=f"unknown norm mode: {mode!r}", error_code="invalid-mode")


def affine(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Compute ``x @ weight.T + bias`` for x [B, F], weight [N, F], bias [N]."""
    _require_ndim(x, 2, "input", "affine")
    _require_ndim(weight, 2, "weight", "affine")
    if x.shape[1] != weight.shape[1] or bias.shape != (weight.shape[0],):
        raise SplurgeSqcpcShapeError(
            message=f"affine: incompatible shapes x{x.shape}, weight{weight.shape}, bias{bias.shape}",
            error_code="dimension-mismatch",
        )

    def backward(grad: np.ndarray) -> None:
        x._accumulate(grad @ weight.data)
        weight._accumulate(grad.T @ x.data)
        bias._accumulate(grad.sum(axis=0))

    return _result(x.data @ weight.data.T + bias.data, (x, weight, bias), "affine", backward)


def diagonal_cross_entropy(scores: Tensor) -> Tensor:
    """Mean over rows of the softmax cross-entropy whose target is the diagonal.

    Row r contributes ``logsumexp(scores[r]) - scores[r, r]``.
    """
    _require_ndim(scores, 2, "scores", "diagonal_cross_entropy")
    rows, cols = scores.shape
    if rows != cols or rows == 0:
        raise SplurgeSqcpcShapeError(
            message=f"diagonal_cross_entropy needs a non-empty square matrix, got {scores.shape}",
            error_code="dimension-mismatch",
        )
    row_max = scores.data.max(axis=1, keepdims=True)
    shifted = scores.data - row_max
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_softmax = shifted - log_norm
    loss = -np.trace(log_softmax, dtype=np.float64) / rows

    def backward(grad: np.ndarray) -> None:
        probs = np.exp(log_softmax)
        probs[np.diag_indices(rows)] -= 1.0
        scores._accumulate(probs * (grad / rows))

    return _result(np.asarray(loss, dtype=scores.dtype), (scores,), "diagonal_cross_entropy", backward)


# Optimizer ---------------------------------------------------------------


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators and the step counter of Adam."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros(cls, params: Mapping[str, np.ndarray]) -> AdamState:
        return cls(
            m={name: np.zeros_like(value) for name, value in params.items()},
            v={name: np.zeros_like(value) for name, value in params.items()},
            step=0,
        )


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    weight_decay: float = 0.0,
    eps: float = ADAM_EPSILON,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update with classic (coupled) L2 weight decay.

    Only parameters named in ``grads`` move; the others are returned as-is.

    Returns:
        The updated parameter mapping and the new optimizer state.

    Raises:
        SplurgeSqcpcValueError: If ``lr`` is negative or not finite.
        SplurgeSqcpcShapeError: If a gradient's shape differs from its parameter.
    """
    if not np.isfinite(lr) or lr < 0:
        raise SplurgeSqcpcValueError(
            message=f"learning rate must be finite and >= 0, got {lr}",
            error_code="invalid-lr",
        )
    beta1, beta2 = betas
    step = state.step + 1
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step
    new_params = dict(params)
    new_m = dict(state.m)
    new_v = dict(state.v)
    for name, grad in grads.items():
        param = params[name]
        if grad.shape != param.shape:
            raise SplurgeSqcpcShapeError(
                message=f"adam_step: gradient for {name} has shape {grad.shape}, parameter {param.shape}",
                error_code="dimension-mismatch",
            )
        g = grad + weight_decay * param if weight_decay else grad
        m = beta1 * new_m.get(name, np.zeros_like(param)) + (1.0 - beta1) * g
        v = beta2 * new_v.get(name, np.zeros_like(param)) + (1.0 - beta2) * g * g
        update = (m / correction1) / (np.sqrt(v / correction2) + eps)
        new_params[name] = (param - lr * update).astype(param.dtype)
        new_m[name] = m.astype(param.dtype)
        new_v[name] = v.astype(param.dtype)
    return new_params, AdamState(m=new_m, v=new_v, step=step)


# Verification ------------------------------------------------------------


def grad_check(fn: Callable[[Tensor], Tensor], point: Tensor | np.ndarray, eps: float = 1e-6) -> float:
    """Compare the analytic gradient of a scalar function with central differences.

    The function is evaluated in float64 at ``point`` and at ``point ± eps`` along
    every coordinate.

    Returns:
        max over coordinates of |analytic - numeric| / max(1, |analytic|).

    Raises:
        SplurgeSqcpcNumericError: If any function value is not finite.
        SplurgeSqcpcShapeError: If the function does not return a single value.
    """
    base = np.array(point.data if isinstance(point, Tensor) else point, dtype=np.float64)
    leaf = Tensor(base.copy(), requires_grad=True)
    out = fn(leaf)
    value = out.item()
    if not np.isfinite(value):
        raise SplurgeSqcpcNumericError(message="grad_check: function value is not finite", error_code="non-finite")
    out.backward()
    analytic = leaf.grad if leaf.grad is not None else np.zeros_like(base)

    numeric = np.zeros_like(base)
    for index in range(base.size):
        shifted = base.copy()
        shifted.flat[index] += eps
        upper = fn(Tensor(shifted)).item()
        shifted.flat[index] -= 2.0 * eps
        lower = fn(Tensor(shifted)).item()
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise SplurgeSqcpcNumericError(message="grad_check: perturbed value is not finite", error_code="non-finite")
        numeric.flat[index] = (upper - lower) / (2.0 * eps)

    if base.size == 0:
        return 0.0
    error = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    worst = float(error.max())
    logger.debug(f"grad_check over {base.size} coordinates: max relative error {worst:.3e}")
    return worst
