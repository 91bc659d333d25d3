"""Conditional diffusion: schedule, forward noising, reverse sampling,
and denoiser training.

The reverse update is
    y_{t-1} = (1/sqrt(a_t)) * (y_t - (1-a_t)/sqrt(1-g_t) * f(x, y_t, g_t))
              + sqrt(1-a_t) * eps_t
with g_t the running product of the per-step retention factors a_t. The
forward marginal y_t = sqrt(g_t)*y0 + sqrt(1-g_t)*eps is the Gaussian
process this update inverts when f predicts the noise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import imageops
from .nn import AdamState, DenoiserModel, denoiser_forward
from .phantom import DatasetManifest, load_pairs

DEFAULT_T = 200
DEFAULT_BETA_START = 1e-4
# At T = 200 the ramp must end high enough for the cumulative retention
# to land near zero (< 0.05); 2e-2 only reaches ~0.13.
DEFAULT_BETA_END = 3.5e-2


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-step retention a_t and cumulative product g_t, t = 1..T.

    Arrays are 0-indexed: alpha[t-1] is a_t. gamma(0) is defined as 1.
    """

    alpha: np.ndarray
    gamma: np.ndarray

    @property
    def T(self) -> int:
        return len(self.alpha)

    def gamma_at(self, t: int) -> float:
        """g_t with the g_0 = 1 convention."""
        return 1.0 if t == 0 else float(self.gamma[t - 1])

    def alpha_at(self, t: int) -> float:
        return float(self.alpha[t - 1])


def make_schedule(
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> DiffusionSchedule:
    """Linear beta ramp; a_t = 1 - beta_t, g_t = prod a_i."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    beta = np.linspace(beta_start, beta_end, T)
    alpha = 1.0 - beta
    gamma = np.cumprod(alpha)
    # beta_start > 0 already keeps every g_t < 1, so the reverse-step
    # denominator sqrt(1 - g_t) can never vanish.
    if np.any(gamma >= 1.0):
        raise ValueError("degenerate schedule: gamma reached 1")
    return DiffusionSchedule(alpha=alpha, gamma=gamma)


def q_sample(y0: np.ndarray, gamma_t: float, eps: np.ndarray) -> np.ndarray:
    """Forward noising: sqrt(g_t)*y0 + sqrt(1-g_t)*eps."""
    if y0.shape != eps.shape:
        raise ValueError(f"shape mismatch: {y0.shape} vs {eps.shape}")
    if not 0.0 < gamma_t <= 1.0:
        raise ValueError(f"gamma_t must be in (0,1], got {gamma_t}")
    return np.sqrt(gamma_t) * y0 + np.sqrt(1.0 - gamma_t) * eps


def p_sample_step(
    m: DenoiserModel,
    x_up: np.ndarray,
    y_t: np.ndarray,
    t: int,
    sched: DiffusionSchedule,
    eps_t: np.ndarray | None,
) -> np.ndarray:
    """One reverse step t -> t-1, exactly as written above."""
    if not 1 <= t <= sched.T:
        raise ValueError(f"t must be in [1, {sched.T}], got {t}")
    a_t = sched.alpha_at(t)
    g_t = sched.gamma_at(t)
    noise_est = denoiser_forward(m, x_up, y_t, g_t)
    y_prev = (y_t - (1.0 - a_t) / np.sqrt(1.0 - g_t) * noise_est) / np.sqrt(a_t)
    if eps_t is not None:
        y_prev = y_prev + np.sqrt(1.0 - a_t) * eps_t
    return y_prev


def sample_chain(
    m: DenoiserModel, x: np.ndarray, sched: DiffusionSchedule, seed: int
) -> np.ndarray:
    """Full reverse chain from pure noise, conditioned on the LR image x.

    Draw order per seed: y_T first, then eps_t for t = T..2; the final
    step adds no noise. Output is clamped to [0, 1].
    """
    rng = np.random.default_rng(seed)
    n = m.scale
    x_up = imageops.resample(x, float(n))
    y = rng.standard_normal(x_up.shape)
    for t in range(sched.T, 0, -1):
        eps_t = rng.standard_normal(x_up.shape) if t > 1 else None
        y = p_sample_step(m, x_up, y, t, sched, eps_t)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"non-finite sample at reverse step t={t}")
    return np.clip(y, 0.0, 1.0)


@dataclass
class TrainConfig:
    epochs: int = 40
    batch: int = 8
    lr: float = 2e-3
    seed: int = 0
    base_channels: int = 8


def train_denoiser(
    manifest: DatasetManifest,
    root: str,
    sched: DiffusionSchedule,
    cfg: TrainConfig,
) -> tuple[DenoiserModel, list[float]]:
    """Noise-prediction training with a mean-absolute objective.

    Per step: sample a batch of (lr, hr) pairs, a timestep per item, and
    Gaussian noise; noise the targets and minimize the L1 gap between the
    estimated and true noise. Returns (model, per-batch loss history).
    """
    pairs = load_pairs(manifest, root, "train")
    if not pairs:
        raise ValueError("manifest has no train split")
    n = manifest.scale
    ups = np.stack([imageops.resample(lr, float(n)) for lr, _ in pairs])
    hrs = np.stack([hr for _, hr in pairs])
    rng = np.random.default_rng(cfg.seed)
    model = DenoiserModel(base_channels=cfg.base_channels, scale=n, seed=cfg.seed)
    opt = AdamState(model.params, lr=cfg.lr)
    history: list[float] = []
    count = len(pairs)
    steps_per_epoch = int(np.ceil(count / cfg.batch))
    for _epoch in range(cfg.epochs):
        order = rng.permutation(count)
        for s in range(steps_per_epoch):
            idx = order[s * cfg.batch : (s + 1) * cfg.batch]
            t = rng.integers(1, sched.T + 1, size=len(idx))
            g = sched.gamma[t - 1]
            eps = rng.standard_normal((len(idx),) + hrs.shape[1:])
            y_t = (
                np.sqrt(g)[:, None, None] * hrs[idx]
                + np.sqrt(1.0 - g)[:, None, None] * eps
            )
            model.params.zero_grad()
            est = model.forward_batch(ups[idx], y_t, g)
            loss = (est - eps[:, None]).mean_abs()
            loss.backward()
            opt.step(model.params)
            val = float(loss.data)
            if not np.isfinite(val):
                raise FloatingPointError(
                    f"training diverged at step {len(history)}; history={history[-5:]}"
                )
            history.append(val)
    return model, history


def save_loss_history(history: list[float], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss"])
        for i, v in enumerate(history):
            writer.writerow([i, f"{v:.8f}"])
