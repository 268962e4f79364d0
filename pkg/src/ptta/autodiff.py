"""Minimal reverse-mode autodiff over a fixed operation set.

Values are float64 numpy arrays of rank 0, 1 or 2. Operations record onto the
Tape of their operands in execution order, so replaying the tape in reverse is
a valid topological backward pass that visits every node exactly once. There
is no broadcasting: shapes must conform exactly.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import NumericError


class Tensor:
    __slots__ = ("values", "grad", "tape", "requires_grad", "name", "_parents", "_backward")

    def __init__(
        self,
        values: np.ndarray,
        tape: "Tape | None",
        requires_grad: bool = False,
        name: str | None = None,
    ):
        self.values = values
        self.grad: np.ndarray | None = None
        self.tape = tape
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def item(self) -> float:
        if self.values.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.values.shape}")
        return float(self.values.reshape(()))

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.values.shape}{label})"


class Tape:
    """Ordered record of executed operations; single-threaded."""

    def __init__(self):
        self._nodes: list[Tensor] = []

    def tensor(self, values, requires_grad: bool = False, name: str | None = None) -> Tensor:
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim > 2:
            raise ValueError(f"tensor {name or ''} has rank {arr.ndim}; only rank 0/1/2 supported")
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"tensor {name or '<leaf>'} contains non-finite values")
        return Tensor(arr, self, requires_grad=requires_grad, name=name)

    def _record(
        self,
        values: np.ndarray,
        parents: tuple[Tensor, ...],
        backward: Callable[[np.ndarray], Sequence[np.ndarray]],
    ) -> Tensor:
        out = Tensor(values, self, requires_grad=any(p.requires_grad for p in parents))
        if out.requires_grad:
            out._parents = parents
            out._backward = backward
            self._nodes.append(out)
        return out

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into .grad of every requires_grad tensor."""
        if loss.tape is not self:
            raise ValueError("loss tensor does not belong to this tape")
        if loss.values.ndim != 0:
            raise ValueError(f"backward expects a scalar loss, got shape {loss.values.shape}")
        for node in self._nodes:
            node.grad = None
            for p in node._parents:
                p.grad = None
        if not loss.requires_grad:
            return
        loss.grad = np.ones_like(loss.values)
        for node in reversed(self._nodes):
            if node.grad is None or node._backward is None:
                continue
            for parent, contrib in zip(node._parents, node._backward(node.grad)):
                if not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = np.array(contrib, dtype=np.float64, copy=True)
                else:
                    parent.grad = parent.grad + contrib


def _tape_of(*xs) -> Tape:
    for x in xs:
        if isinstance(x, Tensor):
            return x.tape
    raise ValueError("at least one operand must be a Tensor")


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.values.shape != b.values.shape:
        raise ValueError(f"{op}: shape mismatch {a.values.shape} vs {b.values.shape}")


def add(a, b) -> Tensor:
    tape = _tape_of(a, b)
    a, b = _wrap_pair(tape, a, b)
    _check_same_shape("add", a, b)
    return tape._record(a.values + b.values, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    tape = _tape_of(a, b)
    a, b = _wrap_pair(tape, a, b)
    _check_same_shape("sub", a, b)
    return tape._record(a.values - b.values, (a, b), lambda g: (g, -g))


def _wrap_pair(tape: Tape, a, b) -> tuple[Tensor, Tensor]:
    if not isinstance(a, Tensor):
        a = tape.tensor(a)
    if not isinstance(b, Tensor):
        b = tape.tensor(b)
    return a, b


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return a.tape._record(a.values * c, (a,), lambda g: (g * c,))


def matmul(a, b) -> Tensor:
    tape = _tape_of(a, b)
    a, b = _wrap_pair(tape, a, b)
    if a.values.ndim != 2 or b.values.ndim != 2:
        raise ValueError(f"matmul: expects rank-2 operands, got {a.values.shape} and {b.values.shape}")
    if a.values.shape[1] != b.values.shape[0]:
        raise ValueError(f"matmul: shape mismatch {a.values.shape} vs {b.values.shape}")
    av, bv = a.values, b.values
    return tape._record(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def matvec(a, v) -> Tensor:
    tape = _tape_of(a, v)
    a, v = _wrap_pair(tape, a, v)
    if a.values.ndim != 2 or v.values.ndim != 1:
        raise ValueError(f"matvec: expects matrix and vector, got {a.values.shape} and {v.values.shape}")
    if a.values.shape[1] != v.values.shape[0]:
        raise ValueError(f"matvec: shape mismatch {a.values.shape} vs {v.values.shape}")
    av, vv = a.values, v.values
    return tape._record(av @ vv, (a, v), lambda g: (np.outer(g, vv), av.T @ g))


def mean_rows(a: Tensor) -> Tensor:
    if a.values.ndim != 2:
        raise ValueError(f"mean_rows: expects a rank-2 tensor, got {a.values.shape}")
    n_rows = a.values.shape[0]
    out = a.values.sum(axis=0) / n_rows
    return a.tape._record(out, (a,), lambda g: (np.tile(g / n_rows, (n_rows, 1)),))


def l2_normalize(v: Tensor) -> Tensor:
    if v.values.ndim != 1:
        raise ValueError(f"l2_normalize: expects a vector, got {v.values.shape}")
    norm = float(np.linalg.norm(v.values))
    if norm <= 1e-12:
        raise NumericError(f"l2_normalize: near-zero norm for tensor {v.name or '<anonymous>'}")
    out = v.values / norm

    def backward(g):
        return ((g - np.dot(g, out) * out) / norm,)

    return v.tape._record(out, (v,), backward)


def dot(u, v) -> Tensor:
    tape = _tape_of(u, v)
    u, v = _wrap_pair(tape, u, v)
    if u.values.ndim != 1 or v.values.ndim != 1:
        raise ValueError(f"dot: expects vectors, got {u.values.shape} and {v.values.shape}")
    _check_same_shape("dot", u, v)
    uv, vv = u.values, v.values
    return tape._record(np.dot(uv, vv), (u, v), lambda g: (g * vv, g * uv))


def cosine_similarity(u, v) -> Tensor:
    # composition of the two tested rules, not a fused kernel
    tape = _tape_of(u, v)
    u, v = _wrap_pair(tape, u, v)
    return dot(l2_normalize(u), l2_normalize(v))


def absolute(a: Tensor) -> Tensor:
    sign = np.sign(a.values)  # subgradient 0 at exactly 0
    return a.tape._record(np.abs(a.values), (a,), lambda g: (g * sign,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.values)
    return a.tape._record(out, (a,), lambda g: (g * out,))


def reduce_sum(a: Tensor) -> Tensor:
    shape = a.values.shape
    return a.tape._record(np.asarray(a.values.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def log_softmax_cross_entropy(logits, targets) -> Tensor:
    """Cross-entropy of log-softmax(logits) at integer target(s).

    Rank-1 logits take a single target index; rank-2 logits take one index per
    row and the result is the mean over rows.
    """
    tape = _tape_of(logits)
    z = logits.values
    if z.ndim == 1:
        j = int(targets)
        if not 0 <= j < z.shape[0]:
            raise ValueError(f"log_softmax_cross_entropy: target {j} out of range for {z.shape[0]} logits")
        logp = _log_softmax(z)
        loss = -logp[j]

        def backward(g):
            grad = np.exp(logp)
            grad[j] -= 1.0
            return (g * grad,)

        return tape._record(np.asarray(loss), (logits,), backward)
    if z.ndim == 2:
        y = np.asarray(targets, dtype=np.int64)
        if y.shape != (z.shape[0],):
            raise ValueError(f"log_softmax_cross_entropy: targets shape {y.shape} does not match batch {z.shape[0]}")
        if y.min() < 0 or y.max() >= z.shape[1]:
            raise ValueError("log_softmax_cross_entropy: target index out of range")
        logp = _log_softmax(z)
        rows = np.arange(z.shape[0])
        loss = -logp[rows, y].sum() / z.shape[0]

        def backward(g):
            grad = np.exp(logp)
            grad[rows, y] -= 1.0
            return (g * grad / z.shape[0],)

        return tape._record(np.asarray(loss), (logits,), backward)
    raise ValueError(f"log_softmax_cross_entropy: expects rank-1 or rank-2 logits, got {z.shape}")


def gradcheck(f: Callable[[Tensor], Tensor], point: np.ndarray, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` maps a leaf tensor to a scalar tensor built on the leaf's tape; it is
    re-evaluated at perturbed points, so it must be a pure function.
    """
    if step <= 0:
        raise ValueError("gradcheck: step must be positive")
    point = np.array(point, dtype=np.float64, copy=True)

    def evaluate(values: np.ndarray, want_grad: bool) -> tuple[float, np.ndarray | None]:
        tape = Tape()
        x = tape.tensor(values, requires_grad=want_grad, name="gradcheck-point")
        out = f(x)
        if out.values.size != 1:
            raise ValueError(f"gradcheck: f must be scalar-valued, got shape {out.values.shape}")
        value = float(out.values.reshape(()))
        if not np.isfinite(value):
            raise NumericError("gradcheck: non-finite forward value")
        if not want_grad:
            return value, None
        tape.backward(out)
        grad = x.grad if x.grad is not None else np.zeros_like(values)
        return value, grad

    _, analytic = evaluate(point, want_grad=True)
    numeric = np.zeros_like(point)
    for idx in np.ndindex(point.shape):
        shifted = point.copy()
        shifted[idx] = point[idx] + step
        f_plus, _ = evaluate(shifted, want_grad=False)
        shifted[idx] = point[idx] - step
        f_minus, _ = evaluate(shifted, want_grad=False)
        numeric[idx] = (f_plus - f_minus) / (2.0 * step)
    denom = np.maximum(1.0, np.abs(numeric))
    rel = np.abs(analytic - numeric) / denom
    return float(rel.max()) if rel.size else 0.0
