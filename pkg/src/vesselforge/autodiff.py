"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough ops for small convolutional encoder-decoders: same-padded
3x3 convolution (im2col), relu, 2x average pool, 2x nearest upsample,
channel concat, elementwise arithmetic, and mean L1/L2 reductions.
Tensors are float64 throughout; layouts are NCHW for conv inputs.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph plumbing ----------------------------------------------------

    def _accum(self, g):
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def backward(self):
        """Reverse-mode sweep from a scalar; populates .grad on leaves."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar loss")
        topo, seen = [], set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            topo.append(t)

        visit(self)
        self.grad = np.ones_like(self.data)
        try:
            for t in reversed(topo):
                if t._backward is not None:
                    t._backward()
                    for p in t._parents:
                        if p.grad is not None and not np.all(np.isfinite(p.grad)):
                            raise FloatingPointError(
                                f"non-finite gradient flowing into tensor '{p.name}'"
                            )
        finally:
            # Release the graph eagerly: backward closures capture large
            # forward-pass buffers and form reference cycles with their
            # tensors, so waiting for the cycle collector lets peak memory
            # grow by many full graphs during long training loops. Leaves
            # (parameters and inputs) have no closure and keep their grads.
            for t in topo:
                if t._backward is not None:
                    t._backward = None
                    t._parents = ()
                    t.grad = None

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data + other.data, name="add")
        out._parents = (self, other)

        def bw():
            self._accum(_unbroadcast(out.grad, self.data.shape))
            other._accum(_unbroadcast(out.grad, other.data.shape))

        out._backward = bw
        return out

    def __sub__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data - other.data, name="sub")
        out._parents = (self, other)

        def bw():
            self._accum(_unbroadcast(out.grad, self.data.shape))
            other._accum(_unbroadcast(-out.grad, other.data.shape))

        out._backward = bw
        return out

    def __mul__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data * other.data, name="mul")
        out._parents = (self, other)

        def bw():
            self._accum(_unbroadcast(out.grad * other.data, self.data.shape))
            other._accum(_unbroadcast(out.grad * self.data, other.data.shape))

        out._backward = bw
        return out

    __radd__ = __add__
    __rmul__ = __mul__

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), name="relu")
        out._parents = (self,)

        def bw():
            self._accum(out.grad * (self.data > 0.0))

        out._backward = bw
        return out

    def sum(self):
        out = Tensor(self.data.sum(), name="sum")
        out._parents = (self,)

        def bw():
            self._accum(np.full_like(self.data, out.grad))

        out._backward = bw
        return out

    def mean_abs(self):
        """Mean |x|; subgradient at 0 is 0 by convention (sign(0) = 0)."""
        out = Tensor(np.abs(self.data).mean(), name="mean_abs")
        out._parents = (self,)

        def bw():
            self._accum(out.grad * np.sign(self.data) / self.data.size)

        out._backward = bw
        return out

    def mean_sq(self):
        out = Tensor((self.data**2).mean(), name="mean_sq")
        out._parents = (self,)

        def bw():
            self._accum(out.grad * 2.0 * self.data / self.data.size)

        out._backward = bw
        return out


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    """Sum gradient over axes that were broadcast in the forward pass."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def conv2d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Same-padded 3x3 convolution. x: (B,C,H,W), w: (O,C,3,3), b: (O,)."""
    xb, ch, h, wd = x.data.shape
    o = w.data.shape[0]
    pad = np.pad(x.data, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = np.lib.stride_tricks.sliding_window_view(pad, (3, 3), axis=(2, 3))
    # win: (B, C, H, W, 3, 3) -> cols (B, H, W, C*9)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(xb, h, wd, ch * 9)
    wf = w.data.reshape(o, ch * 9)
    out_data = cols @ wf.T + b.data
    out = Tensor(out_data.transpose(0, 3, 1, 2), name="conv2d")
    out._parents = (x, w, b)

    def bw():
        g = out.grad.transpose(0, 2, 3, 1)  # (B,H,W,O)
        b._accum(g.sum(axis=(0, 1, 2)))
        gw = np.tensordot(g, cols, axes=([0, 1, 2], [0, 1, 2]))  # (O, C*9)
        w._accum(gw.reshape(w.data.shape))
        gcols = g @ wf  # (B,H,W,C*9)
        gcols = gcols.reshape(xb, h, wd, ch, 3, 3).transpose(0, 3, 1, 2, 4, 5)
        gpad = np.zeros_like(pad)
        for i in range(3):
            for j in range(3):
                gpad[:, :, i : i + h, j : j + wd] += gcols[:, :, :, :, i, j]
        x._accum(gpad[:, :, 1 : 1 + h, 1 : 1 + wd])

    out._backward = bw
    return out


def avgpool2(x: Tensor) -> Tensor:
    """2x2 average pooling with stride 2; dims must be even."""
    b, c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise ValueError(f"avgpool2 needs even dims, got {x.data.shape}")
    r = x.data.reshape(b, c, h // 2, 2, w // 2, 2)
    out = Tensor(r.mean(axis=(3, 5)), name="avgpool2")
    out._parents = (x,)

    def bw():
        g = np.repeat(np.repeat(out.grad, 2, axis=2), 2, axis=3) / 4.0
        x._accum(g)

    out._backward = bw
    return out


def upsample2(x: Tensor) -> Tensor:
    """2x nearest-neighbor upsampling."""
    out = Tensor(np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3), name="upsample2")
    out._parents = (x,)

    def bw():
        b, c, h, w = x.data.shape
        g = out.grad.reshape(b, c, h, 2, w, 2).sum(axis=(3, 5))
        x._accum(g)

    out._backward = bw
    return out


def concat_channels(tensors) -> Tensor:
    """Concatenate NCHW tensors along the channel axis."""
    tensors = list(tensors)
    out = Tensor(np.concatenate([t.data for t in tensors], axis=1), name="concat")
    out._parents = tuple(tensors)

    def bw():
        ofs = 0
        for t in tensors:
            n = t.data.shape[1]
            t._accum(out.grad[:, ofs : ofs + n])
            ofs += n

    out._backward = bw
    return out
