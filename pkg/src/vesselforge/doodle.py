"""Condition preparation and forgery.

A hand-drawn doodle (or a random crop of a real image) becomes the
generator's condition by faking the look of an upsampled low-resolution
acquisition: resample round-trip, streaky noise overlay, light blur.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import imageops
from .diffusion import DiffusionSchedule, sample_chain
from .nn import DenoiserModel


@dataclass(frozen=True)
class NoiseParams:
    density: float = 0.05
    streak_len: int = 4


@dataclass(frozen=True)
class DoodleConfig:
    n: int = 4
    noise: NoiseParams = field(default_factory=NoiseParams)
    blur_sigma: float = 1.0
    seed: int = 0


def prepare_doodle_condition(doodle: np.ndarray, cfg: DoodleConfig) -> np.ndarray:
    """Degrade a doodle into an LR-look condition at its own dims."""
    h, w = doodle.shape
    if h % cfg.n or w % cfg.n:
        raise ValueError(f"doodle dims {doodle.shape} not divisible by N={cfg.n}")
    trunk = imageops.resample(imageops.resample(doodle, 1.0 / cfg.n), float(cfg.n))
    noise = imageops.rain_noise(
        trunk.shape, cfg.noise.density, cfg.noise.streak_len, cfg.seed
    )
    return imageops.gaussian_blur3(imageops.overlay(trunk, noise), cfg.blur_sigma)


def prepare_crop_condition(
    hr: np.ndarray, crop: tuple[int, int], cfg: DoodleConfig
) -> np.ndarray:
    """Upsampled random crop as the vessel trunk; same degradation chain."""
    if crop[0] > hr.shape[0] or crop[1] > hr.shape[1]:
        raise ValueError(f"crop {crop} exceeds image {hr.shape}")
    trunk = imageops.resample(imageops.random_crop(hr, crop, cfg.seed), float(cfg.n))
    noise = imageops.rain_noise(
        trunk.shape, cfg.noise.density, cfg.noise.streak_len, cfg.seed + 1
    )
    return imageops.gaussian_blur3(imageops.overlay(trunk, noise), cfg.blur_sigma)


def forge(
    m: DenoiserModel, condition: np.ndarray, sched: DiffusionSchedule, seed: int
) -> np.ndarray:
    """Run the reverse chain on the prepared condition and normalize.

    The prepared condition is HR-sized; the chain consumes an LR
    condition, so it is downsampled by the model scale first.
    """
    lr = imageops.resample(condition, 1.0 / m.scale)
    return imageops.normalize_unit(sample_chain(m, lr, sched, seed))
