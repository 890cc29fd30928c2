"""A small reverse-mode autodiff over dense float64 numpy arrays.

Operations executed inside a :class:`Tape` context are recorded in order;
``Tape.backward`` replays them in reverse, which is a valid reverse
topological order because every op is recorded after its inputs exist.
Outside a tape nothing is recorded, so inference pays no graph overhead.
"""
from __future__ import annotations

import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np


class NumericError(ArithmeticError):
    pass


class ShapeError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    def _accumulate(self, g: np.ndarray):
        # never mutate in place: ``g`` may be a view shared with another node
        self.grad = g if self.grad is None else self.grad + g

    # operator sugar for tests and small expressions
    def __add__(self, other):
        return add(self, as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)


class Param(Tensor):
    """A named trainable tensor. ``frozen`` params are never handed to an optimizer."""

    __slots__ = ("name", "frozen", "populated")

    def __init__(self, data, name: str, frozen: bool = False):
        super().__init__(data, requires_grad=not frozen)
        self.name = name
        self.frozen = frozen
        self.grad = np.zeros_like(self.data)
        self.populated = False

    def _accumulate(self, g: np.ndarray):
        self.grad += g
        self.populated = True

    def zero_grad(self):
        self.grad.fill(0.0)
        self.populated = False

    def __repr__(self):
        return f"Param({self.name!r}, shape={self.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# --- tape --------------------------------------------------------------------

_local = threading.local()


def _active() -> Optional["Tape"]:
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


class Tape:
    def __init__(self):
        self.nodes: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []

    def __enter__(self):
        if not hasattr(_local, "stack"):
            _local.stack = []
        _local.stack.append(self)
        return self

    def __exit__(self, *exc):
        _local.stack.pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def backward(self, loss: Tensor, seed: Optional[np.ndarray] = None):
        if seed is None:
            if loss.data.size != 1:
                raise ShapeError(f"backward needs a scalar loss or an explicit seed, got {loss.shape}")
            seed = np.ones_like(loss.data)
        loss._accumulate(seed)
        for out, parents, fn in reversed(self.nodes):
            if out.grad is None:
                continue
            grads = fn(out.grad)
            for p, g in zip(parents, grads):
                if g is not None and p.requires_grad:
                    p._accumulate(g)
        # release intermediate buffers
        for out, _, _ in self.nodes:
            if not isinstance(out, Param):
                out.grad = None
        self.nodes.clear()


def _finite(arr: np.ndarray, op: str) -> np.ndarray:
    # a finite sum proves every entry finite; only a non-finite sum needs the full scan
    if not np.isfinite(arr.sum()) and not np.isfinite(arr).all():
        raise NumericError(f"{op}: non-finite output")
    return arr


def _make(data: np.ndarray, op: str, parents: tuple[Tensor, ...], backward: Callable) -> Tensor:
    out = Tensor(_finite(data, op))
    tape = _active()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.nodes.append((out, parents, backward))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# --- elementwise -------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.shape, b.shape
    return _make(a.data + b.data, "add", (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.shape, b.shape
    return _make(a.data - b.data, "sub", (a, b),
                 lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    return _make(ad * bd, "mul", (a, b),
                 lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise maximum with broadcasting; ties send the gradient to ``a``."""
    pick = a.data >= b.data
    sa, sb = a.shape, b.shape
    return _make(np.where(pick, a.data, b.data), "maximum", (a, b),
                 lambda g: (_unbroadcast(g * pick, sa), _unbroadcast(g * ~pick, sb)))


def scale(a: Tensor, c: float) -> Tensor:
    return _make(a.data * c, "scale", (a,), lambda g: (g * c,))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _make(x.data * mask, "relu", (x,), lambda g: (g * mask,))


def square(x: Tensor) -> Tensor:
    xd = x.data
    return _make(xd * xd, "square", (x,), lambda g: (2.0 * xd * g,))


# --- linear algebra ----------------------------------------------------------


def _swap(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes; leading axes broadcast."""
    if a.data.ndim < 2 or b.data.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data

    def backward(g):
        return (_unbroadcast(g @ _swap(bd), ad.shape), _unbroadcast(_swap(ad) @ g, bd.shape))

    return _make(ad @ bd, "matmul", (a, b), backward)


def linear(x: Tensor, w: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ w + bias`` with ``w`` of shape [in, out]; x may carry leading axes."""
    if w.data.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ShapeError(f"linear shape mismatch: {x.shape} @ {w.shape}")
    xd, wd = x.data, w.data
    out = xd @ wd
    if bias is not None:
        if bias.shape != (wd.shape[1],):
            raise ShapeError(f"linear bias shape {bias.shape} != ({wd.shape[1]},)")
        out = out + bias.data

    def backward(g):
        gx = g @ wd.T
        g2 = g.reshape(-1, g.shape[-1])
        gw = xd.reshape(-1, xd.shape[-1]).T @ g2
        gb = g2.sum(axis=0) if bias is not None else None
        return gx, gw, gb

    parents = (x, w, bias) if bias is not None else (x, w)
    return _make(out, "linear", parents, backward)


# --- normalization -----------------------------------------------------------


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then apply ``gain`` and ``bias``."""
    n = x.shape[-1]
    if n < 2:
        raise ShapeError("layer_norm needs a last axis of length >= 2")
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gd = gain.data

    def backward(g):
        gxhat = g * gd
        gx = inv * (gxhat - gxhat.mean(axis=-1, keepdims=True)
                    - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
        g2 = g.reshape(-1, n)
        return gx, (g2 * xhat.reshape(-1, n)).sum(axis=0), g2.sum(axis=0)

    return _make(xhat * gd + bias.data, "layer_norm", (x, gain, bias), backward)


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis (max-subtracted)."""
    y = x.data - x.data.max(axis=-1, keepdims=True)
    np.exp(y, out=y)
    y /= y.sum(axis=-1, keepdims=True)

    def backward(g):
        gy = g * y
        gy -= y * gy.sum(axis=-1, keepdims=True)
        return (gy,)

    return _make(y, "softmax_rows", (x,), backward)


def attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """``softmax_rows(q @ k^T) @ v`` as one op; leading axes broadcast.

    Equal to composing matmul, transpose and softmax_rows, but keeps a single
    score buffer and skips the intermediate graph nodes.
    """
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"attention shape mismatch: q {q.shape}, k {k.shape}, v {v.shape}")
    qd, kd, vd = q.data, k.data, v.data
    a = qd @ _swap(kd)
    a -= a.max(axis=-1, keepdims=True)
    np.exp(a, out=a)
    a /= a.sum(axis=-1, keepdims=True)

    def backward(g):
        gs = g @ _swap(vd)
        gs -= (gs * a).sum(axis=-1, keepdims=True)
        gs *= a
        return (_unbroadcast(gs @ kd, qd.shape), _unbroadcast(_swap(gs) @ qd, kd.shape),
                _unbroadcast(_swap(a) @ g, vd.shape))

    return _make(a @ vd, "attention", (q, k, v), backward)


def attention_shared(q: Tensor, k1: Tensor, v1: Tensor, k2: Tensor, v2: Tensor) -> Tensor:
    """Attention of a shared query block over per-sample plus shared keys.

    ``q`` is [Lq, d]; ``k1``/``v1`` are per sample [B, n1, .]; ``k2``/``v2``
    are shared [n2, .]. The result equals ``attention(q, concat(k1, k2),
    concat(v1, v2))`` with the shared block broadcast over B, but the
    shared half of the score matrix is computed once instead of B times.
    """
    if q.data.ndim != 2 or k2.data.ndim != 2 or v2.data.ndim != 2:
        raise ShapeError(f"attention_shared needs unbatched q, k2, v2: {q.shape}, {k2.shape}, {v2.shape}")
    if not (q.shape[-1] == k1.shape[-1] == k2.shape[-1]) or k1.shape[-2] != v1.shape[-2] \
            or k2.shape[0] != v2.shape[0] or v1.shape[-1] != v2.shape[-1]:
        raise ShapeError(f"attention_shared shape mismatch: q {q.shape}, k1 {k1.shape}, v1 {v1.shape}, "
                         f"k2 {k2.shape}, v2 {v2.shape}")
    qd, k1d, v1d, k2d, v2d = q.data, k1.data, v1.data, k2.data, v2.data
    s2 = qd @ k2d.T
    m2 = s2.max(axis=-1)
    e2 = np.exp(s2 - m2[:, None])
    z2 = e2.sum(axis=-1)
    o2 = e2 @ v2d
    a1 = qd @ _swap(k1d)
    m = np.maximum(a1.max(axis=-1), m2)
    a1 -= m[..., None]
    np.exp(a1, out=a1)
    c = np.exp(m2 - m)
    z = a1.sum(axis=-1) + c * z2
    a1 /= z[..., None]
    sc = c / z
    out = a1 @ v1d + sc[..., None] * o2

    def backward(g):
        rowdot = (g * out).sum(axis=-1)
        gs1 = g @ _swap(v1d)
        gs1 -= rowdot[..., None]
        gs1 *= a1
        gsum = (sc[..., None] * g).sum(axis=0)
        gs2 = e2 * (gsum @ v2d.T - (sc * rowdot).sum(axis=0)[:, None])
        gq = (gs1 @ k1d).sum(axis=0) + gs2 @ k2d
        return gq, _swap(gs1) @ qd, _swap(a1) @ g, gs2.T @ qd, e2.T @ gsum

    return _make(out, "attention_shared", (q, k1, v1, k2, v2), backward)


# --- convolution -------------------------------------------------------------


def depthwise_conv1d(x: Tensor, kernel: Tensor) -> Tensor:
    """Per-channel 1-D cross-correlation along axis -2 with same-length zero padding.

    ``x`` is [..., L, C] and ``kernel`` is [k, C] with k odd.
    """
    k, c = kernel.shape
    if k % 2 == 0:
        raise ShapeError(f"depthwise_conv1d needs an odd kernel size, got {k}")
    if x.shape[-1] != c:
        raise ShapeError(f"depthwise_conv1d channel mismatch: input {x.shape}, kernel {kernel.shape}")
    half = k // 2
    xd, kd = x.data, kernel.data
    L = xd.shape[-2]
    xp = np.zeros(xd.shape[:-2] + (L + 2 * half, c), dtype=xd.dtype)
    xp[..., half:half + L, :] = xd
    out = np.zeros_like(xd)
    for j in range(k):
        out += xp[..., j:j + L, :] * kd[j]

    def backward(g):
        gp = np.zeros_like(xp)
        gk = np.empty_like(kd)
        for j in range(k):
            gp[..., j:j + L, :] += g * kd[j]
            gk[j] = (g * xp[..., j:j + L, :]).reshape(-1, c).sum(axis=0)
        return gp[..., half:half + L, :], gk

    return _make(out, "depthwise_conv1d", (x, kernel), backward)


# --- shape plumbing ----------------------------------------------------------


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    old = x.shape
    return _make(x.data.reshape(shape), "reshape", (x,), lambda g: (g.reshape(old),))


def transpose(x: Tensor) -> Tensor:
    """Swap the last two axes."""
    return _make(_swap(x.data), "transpose", (x,), lambda g: (_swap(g),))


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    xs = list(xs)
    sizes = [t.shape[axis] for t in xs]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(np.concatenate([t.data for t in xs], axis=axis), "concat", tuple(xs), backward)


def rows(x: Tensor, start: int, stop: int) -> Tensor:
    """Slice ``[start:stop]`` along axis -2."""
    shape = x.shape
    L = shape[-2]
    if not 0 <= start <= stop <= L:
        raise ShapeError(f"rows: slice [{start}:{stop}] out of range for length {L}")

    def backward(g):
        gx = np.zeros(shape)
        gx[..., start:stop, :] = g
        return (gx,)

    return _make(x.data[..., start:stop, :], "rows", (x,), backward)


def broadcast_to(x: Tensor, shape: Sequence[int]) -> Tensor:
    old = x.shape
    return _make(np.broadcast_to(x.data, shape).copy(), "broadcast_to", (x,),
                 lambda g: (_unbroadcast(g, old),))


def pad_rows(x: Tensor, total: int) -> Tensor:
    """Zero-pad axis -2 up to ``total`` rows."""
    L = x.shape[-2]
    if total < L:
        raise ShapeError(f"pad_rows: cannot pad {L} rows down to {total}")
    if total == L:
        return x
    out = np.zeros(x.shape[:-2] + (total, x.shape[-1]), dtype=x.data.dtype)
    out[..., :L, :] = x.data
    return _make(out, "pad_rows", (x,), lambda g: (g[..., :L, :],))


def mean(x: Tensor, axis: int) -> Tensor:
    n = x.shape[axis]
    shape = x.shape

    def backward(g):
        return (np.broadcast_to(np.expand_dims(g, axis), shape) / n,)

    return _make(x.data.mean(axis=axis), "mean", (x,), backward)


def max_pool(x: Tensor, axis: int) -> Tensor:
    """Maximum over ``axis``; the gradient goes to the first maximal entry."""
    idx = np.expand_dims(x.data.argmax(axis=axis), axis)
    shape = x.shape

    def backward(g):
        gx = np.zeros(shape, dtype=g.dtype)
        np.put_along_axis(gx, idx, np.expand_dims(g, axis), axis=axis)
        return (gx,)

    return _make(np.take_along_axis(x.data, idx, axis=axis).squeeze(axis), "max_pool", (x,), backward)


def total(x: Tensor) -> Tensor:
    shape = x.shape
    return _make(np.asarray(x.data.sum()), "sum", (x,), lambda g: (np.broadcast_to(g, shape).copy(),))


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of ``table`` by integer ``ids``."""
    ids = np.asarray(ids, dtype=np.int64)
    V = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= V):
        raise ShapeError(f"token id out of range [0, {V})")

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return (gt,)

    return _make(table.data[ids], "embedding", (table,), backward)


# --- losses ------------------------------------------------------------------


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean cross-entropy of integer ``targets`` under row-wise ``logits``."""
    targets = np.asarray(targets, dtype=np.int64)
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    n = targets.shape[0]
    rows = np.arange(n)
    loss = -logp[rows, targets].mean()

    def backward(g):
        p = np.exp(logp)
        p[rows, targets] -= 1.0
        return (p * (g / n),)

    return _make(np.asarray(loss), "cross_entropy", (logits,), backward)


# --- initialisation ----------------------------------------------------------


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape if shape is not None else (fan_in, fan_out))


# --- gradient checking -------------------------------------------------------


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences.

    ``f`` must rebuild its computation from the current ``params`` values on
    every call and return a scalar tensor.
    """
    for p in params:
        if isinstance(p, Param):
            p.zero_grad()
        else:
            p.grad = None
            p.requires_grad = True
    with Tape() as tape:
        out = f()
        _finite(out.data, "grad_check")
        tape.backward(out)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    worst = 0.0
    for p, g_ad in zip(params, analytic):
        flat = p.data.reshape(-1)
        gflat = g_ad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = float(_finite(f().data, "grad_check"))
            flat[i] = orig - eps
            fm = float(_finite(f().data, "grad_check"))
            flat[i] = orig
            g_fd = (fp - fm) / (2.0 * eps)
            err = abs(gflat[i] - g_fd) / max(1e-8, abs(gflat[i]) + abs(g_fd))
            worst = max(worst, err)
    for p in params:
        if isinstance(p, Param):
            p.zero_grad()
    return worst


# --- optimizer ---------------------------------------------------------------


@dataclass
class AdamState:
    params: list[Param]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        for p in self.params:
            if p.frozen:
                raise ValueError(f"frozen parameter {p.name!r} handed to the optimizer")
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]


def adam_step(params: Sequence[Param], state: AdamState) -> AdamState:
    """One bias-corrected Adam update; gradients are zeroed afterwards."""
    if len(params) != len(state.params) or any(a is not b for a, b in zip(params, state.params)):
        raise ValueError("adam_step: parameter list does not match optimizer state")
    missing = [p.name for p in params if not p.populated]
    if missing:
        raise RuntimeError(f"adam_step called before gradients were populated: {missing[:5]}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        with np.errstate(over="ignore"):
            v += (1.0 - b2) * g * g
        p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.zero_grad()
        # an overflowing second moment would silently freeze the parameter
        if not (np.isfinite(v.sum()) and np.isfinite(p.data.sum())):
            raise NumericError(f"adam_step: non-finite optimizer state for {p.name}")
    return state


# --- checkpoints -------------------------------------------------------------

_MAGIC = b"OCICKPT\x00"
_VERSION = 1


def save_checkpoint(path, params: Iterable[Param]) -> None:
    """Header (magic, version, count) then per param: name, shape, little-endian float64."""
    params = list(params)
    chunks = [_MAGIC, struct.pack("<II", _VERSION, len(params))]
    for p in params:
        name = p.name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name)) + name)
        chunks.append(struct.pack("<I", p.data.ndim) + struct.pack(f"<{p.data.ndim}I", *p.shape))
        chunks.append(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_checkpoint(path) -> dict[str, np.ndarray]:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e.strerror}") from None
    try:
        if raw[:8] != _MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
        version, count = struct.unpack_from("<II", raw, 8)
        if version != _VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        pos = 16
        out: dict[str, np.ndarray] = {}
        for _ in range(count):
            (n,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            name = raw[pos:pos + n].decode("utf-8")
            pos += n
            (ndim,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}I", raw, pos)
            pos += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            if pos + 8 * size > len(raw):
                raise CheckpointError(f"{path}: truncated data for {name!r}")
            out[name] = np.frombuffer(raw, dtype="<f8", count=size, offset=pos).reshape(shape).copy()
            pos += 8 * size
        if pos != len(raw):
            raise CheckpointError(f"{path}: {len(raw) - pos} trailing bytes")
        return out
    except (struct.error, UnicodeDecodeError) as e:
        raise CheckpointError(f"{path}: corrupted checkpoint ({e})") from None


def load_checkpoint(path, params: Iterable[Param]) -> None:
    """Load values into ``params`` in place, matching by name."""
    stored = read_checkpoint(path)
    for p in params:
        if p.name not in stored:
            raise CheckpointError(f"checkpoint has no parameter {p.name!r}")
        arr = stored[p.name]
        if arr.shape != p.shape:
            raise CheckpointError(f"shape mismatch for {p.name!r}: checkpoint {arr.shape}, model {p.shape}")
        p.data[...] = arr
