"""Small convolutional networks and their training machinery.

Two architectures share the autodiff core: a conditional noise estimator
(3-level encoder-decoder with skip connections and a constant
conditioning plane) and a residual super-resolution net whose body
weights are reused across two recursion steps. Checkpoints are a
versioned binary format: JSON header + little-endian float32 blobs.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from . import imageops
from .autodiff import Tensor, avgpool2, concat_channels, conv2d, upsample2

CHECKPOINT_MAGIC = b"VFCK"
CHECKPOINT_VERSION = 1


class ParamSet:
    """Ordered named parameter tensors with a flat view for regularization."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        t = Tensor(data, requires_grad=True, name=name)
        self.params[name] = t
        return t

    def __getitem__(self, name):
        return self.params[name]

    def items(self):
        return self.params.items()

    def n_params(self) -> int:
        return sum(t.data.size for t in self.params.values())

    def flat(self) -> np.ndarray:
        return np.concatenate([t.data.ravel() for t in self.params.values()])

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def check_finite(self):
        for name, t in self.params.items():
            if not np.all(np.isfinite(t.data)):
                raise FloatingPointError(f"non-finite parameter '{name}'")


def _init_conv(rng: np.random.Generator, out_c: int, in_c: int, zero=False):
    """Fan-in-scaled uniform init; zero for final layers."""
    if zero:
        w = np.zeros((out_c, in_c, 3, 3))
    else:
        bound = 1.0 / np.sqrt(in_c * 9)
        w = rng.uniform(-bound, bound, size=(out_c, in_c, 3, 3))
    return w, np.zeros(out_c)


class DenoiserModel:
    """Conditional noise estimator f(x_up, y_t, gamma_t).

    Inputs are stacked as channels [upsampled condition, noisy image,
    constant gamma plane]; output has the noisy image's dims.
    """

    kind = "denoiser"

    def __init__(self, base_channels: int = 8, scale: int = 4, seed: int = 0):
        self.arch = {"kind": self.kind, "base_channels": base_channels, "scale": scale}
        c = base_channels
        rng = np.random.default_rng(seed)
        self.params = ParamSet()
        layers = [
            ("conv_in", c, 3, False),
            ("enc1", 2 * c, c, False),
            ("enc2", 2 * c, 2 * c, False),
            ("dec1", c, 4 * c, False),
            ("dec0", c, 2 * c, False),
            ("conv_out", 1, c, True),
        ]
        for name, out_c, in_c, zero in layers:
            w, b = _init_conv(rng, out_c, in_c, zero=zero)
            self.params.add(f"{name}.w", w)
            self.params.add(f"{name}.b", b)

    @property
    def scale(self) -> int:
        return self.arch["scale"]

    def _conv(self, name, x):
        return conv2d(x, self.params[f"{name}.w"], self.params[f"{name}.b"])

    def forward_batch(self, x_up: np.ndarray, y_t: np.ndarray, gamma_t: np.ndarray) -> Tensor:
        """Differentiable batched forward. x_up, y_t: (B,H,W); gamma_t: (B,)."""
        if x_up.shape != y_t.shape:
            raise ValueError(f"condition/noisy dims differ: {x_up.shape} vs {y_t.shape}")
        b, h, w = y_t.shape
        gamma_plane = np.broadcast_to(
            np.asarray(gamma_t, dtype=np.float64)[:, None, None], (b, h, w)
        )
        stacked = np.stack([x_up, y_t, gamma_plane], axis=1)  # (B,3,H,W)
        x = Tensor(stacked)
        h0 = self._conv("conv_in", x).relu()
        h1 = self._conv("enc1", avgpool2(h0)).relu()
        h2 = self._conv("enc2", avgpool2(h1)).relu()
        u1 = self._conv("dec1", concat_channels([upsample2(h2), h1])).relu()
        u0 = self._conv("dec0", concat_channels([upsample2(u1), h0])).relu()
        return self._conv("conv_out", u0)


def denoiser_forward(
    m: DenoiserModel, x_up: np.ndarray, y_t: np.ndarray, gamma_t: float
) -> np.ndarray:
    """Single-image noise estimate; pure function of (params, inputs)."""
    if not 0.0 < gamma_t <= 1.0:
        raise ValueError(f"gamma_t must be in (0,1], got {gamma_t}")
    m.params.check_finite()
    out = m.forward_batch(x_up[None], y_t[None], np.array([gamma_t]))
    return out.data[0, 0]


class SrModel:
    """Residual super-resolution net over a bicubic-upsampled base.

    The body convolution is applied twice with shared weights; the final
    layer starts at zero so a fresh model reproduces bicubic exactly.
    """

    kind = "sr"

    def __init__(self, base_channels: int = 10, scale: int = 4, seed: int = 0):
        self.arch = {"kind": self.kind, "base_channels": base_channels, "scale": scale}
        c = base_channels
        rng = np.random.default_rng(seed)
        self.params = ParamSet()
        for name, out_c, in_c, zero in [
            ("conv_in", c, 1, False),
            ("body", c, c, False),
            ("conv_out", 1, c, True),
        ]:
            w, b = _init_conv(rng, out_c, in_c, zero=zero)
            self.params.add(f"{name}.w", w)
            self.params.add(f"{name}.b", b)

    @property
    def scale(self) -> int:
        return self.arch["scale"]

    def _conv(self, name, x):
        return conv2d(x, self.params[f"{name}.w"], self.params[f"{name}.b"])

    def forward_batch(self, up: np.ndarray) -> Tensor:
        """Differentiable residual on an already-upsampled batch (B,H,W)."""
        x = Tensor(up[:, None])
        h = self._conv("conv_in", x).relu()
        h = self._conv("body", h).relu()
        h = self._conv("body", h).relu()
        return self._conv("conv_out", h) + x


def sr_forward(m: SrModel, lr: np.ndarray) -> np.ndarray:
    """Upsample by the model scale and add the learned residual."""
    m.params.check_finite()
    up = imageops.resample(lr, float(m.scale))
    return m.forward_batch(up[None]).data[0, 0]


class AdamState:
    """Per-parameter first/second moment accumulators with bias correction."""

    def __init__(self, params: ParamSet, lr=2e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.step_count = 0
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}

    def step(self, params: ParamSet):
        self.step_count += 1
        t = self.step_count
        for name, p in params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise ValueError(f"gradient shape mismatch for '{name}'")
            m = self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            v = self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g**2
            m_hat = m / (1 - self.beta1**t)
            v_hat = v / (1 - self.beta2**t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def grad_check(params: ParamSet, loss_fn, h: float = 1e-4) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    `loss_fn()` must build a fresh graph from the current parameter values
    and return a scalar Tensor. Guarded to small models.
    """
    if params.n_params() > 10_000:
        raise ValueError("grad_check limited to models with <= 10k parameters")
    params.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = {k: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
                for k, t in params.items()}
    max_err = 0.0
    for name, t in params.items():
        flat = t.data.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = float(loss_fn().data)
            flat[i] = orig - h
            lm = float(loss_fn().data)
            flat[i] = orig
            num = (lp - lm) / (2 * h)
            ana = analytic[name].ravel()[i]
            denom = max(abs(ana), abs(num), 1e-8)
            max_err = max(max_err, abs(ana - num) / denom)
    return max_err


# -- checkpoint I/O --------------------------------------------------------


def save_checkpoint(model, path) -> None:
    """Write magic + versioned JSON header + little-endian float32 params."""
    header = {
        "version": CHECKPOINT_VERSION,
        "arch": model.arch,
        "params": [
            {"name": k, "shape": list(t.data.shape)} for k, t in model.params.items()
        ],
    }
    hb = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(hb)))
        f.write(hb)
        for _, t in model.params.items():
            f.write(t.data.astype("<f4").tobytes())


def load_checkpoint(path):
    """Load a checkpoint into a freshly built model of the recorded arch."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode())
        if header["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header['version']}")
        arch = header["arch"]
        cls = {"denoiser": DenoiserModel, "sr": SrModel}[arch["kind"]]
        model = cls(base_channels=arch["base_channels"], scale=arch["scale"])
        for spec in header["params"]:
            shape = tuple(spec["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = f.read(n * 4)
            data = np.frombuffer(buf, dtype="<f4").astype(np.float64).reshape(shape)
            model.params[spec["name"]].data = data
    model.params.check_finite()
    return model
