"""Deterministic grayscale raster primitives.

Images are 2-D float64 numpy arrays with values in [0, 1], row-major
(height, width). Every stochastic operation takes an explicit integer
seed and is bit-identical across runs for the same inputs.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

# Catmull-Rom-style cubic parameter used by common bicubic resizers.
BICUBIC_A = -0.5

# D4 (dihedral) augmentation ids: rotations 0/90/180/270, then the same
# four preceded by a horizontal flip.
D4_IDS = tuple(range(8))


def _check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected 2-D image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img


def _reflect_index(idx: np.ndarray, n: int) -> np.ndarray:
    """Reflect out-of-range indices into [0, n-1] without repeating the edge."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * (n - 1)
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - idx, idx)


def _cubic_kernel(x: np.ndarray, a: float = BICUBIC_A) -> np.ndarray:
    ax = np.abs(x)
    w = np.zeros_like(ax)
    near = ax <= 1.0
    far = (ax > 1.0) & (ax < 2.0)
    w[near] = (a + 2.0) * ax[near] ** 3 - (a + 3.0) * ax[near] ** 2 + 1.0
    w[far] = a * ax[far] ** 3 - 5.0 * a * ax[far] ** 2 + 8.0 * a * ax[far] - 4.0 * a
    return w


def _resample_axis(img: np.ndarray, out_n: int, axis: int) -> np.ndarray:
    """Bicubic resampling along one axis with reflected edges.

    When minifying, the kernel support is stretched by the scale factor
    and the weights renormalized (as common bicubic resizers do), so the
    output is anti-aliased rather than point-sampled.
    """
    n = img.shape[axis]
    # Center-aligned source coordinates for each output sample.
    scale = n / out_n
    src = (np.arange(out_n) + 0.5) * scale - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    support = max(scale, 1.0)
    lo = int(np.floor(-2.0 * support)) + 1
    hi = int(np.ceil(2.0 * support))
    out = np.zeros(img.shape[:axis] + (out_n,) + img.shape[axis + 1 :])
    total = np.zeros(out_n)
    shape = [1] * img.ndim
    shape[axis] = out_n
    for k in range(lo, hi + 1):
        idx = _reflect_index(base + k, n)
        w = _cubic_kernel((k - frac) / support) / support
        total += w
        taken = np.take(img, idx, axis=axis)
        out += taken * w.reshape(shape)
    return out / total.reshape(shape)


def resample(img: np.ndarray, factor: float) -> np.ndarray:
    """Bicubic resize by `factor`; output dims are round(dims * factor)."""
    img = _check_image(img)
    if factor <= 0:
        raise ValueError(f"factor must be positive, got {factor}")
    out_h = int(round(img.shape[0] * factor))
    out_w = int(round(img.shape[1] * factor))
    if out_h < 1 or out_w < 1:
        raise ValueError(f"factor {factor} yields empty output for shape {img.shape}")
    if factor == 1.0:
        return img.copy()
    out = _resample_axis(img, out_h, axis=0)
    out = _resample_axis(out, out_w, axis=1)
    return np.clip(out, 0.0, 1.0)


def gaussian_kernel3(sigma: float) -> np.ndarray:
    """3x3 kernel of Gaussian samples at integer offsets, renormalized to sum 1."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d = np.arange(-1, 2, dtype=np.float64)
    dx, dy = np.meshgrid(d, d)
    k = np.exp(-(dx**2 + dy**2) / (2.0 * sigma**2))
    return k / k.sum()


def gaussian_blur3(img: np.ndarray, sigma: float) -> np.ndarray:
    """Blur with a fixed 3x3 sampled-Gaussian kernel; reflect-padded."""
    img = _check_image(img)
    k = gaussian_kernel3(sigma)
    h, w = img.shape
    ri = _reflect_index(np.arange(-1, h + 1), h)
    ci = _reflect_index(np.arange(-1, w + 1), w)
    padded = img[np.ix_(ri, ci)]
    out = np.zeros_like(img)
    for i in range(3):
        for j in range(3):
            out += k[i, j] * padded[i : i + h, j : j + w]
    return np.clip(out, 0.0, 1.0)


def rain_draws(
    shape: tuple[int, int], density: float, streak_len: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Raw streak placement: boolean coverage mask and standard-normal values.

    Streak seeds are per-pixel Bernoulli with p = density / streak_len so the
    expected covered fraction is ~density; each seed extends downward.
    """
    h, w = shape
    p = min(1.0, density / streak_len)
    seeds = rng.random((h, w)) < p
    draws = rng.standard_normal((h, w))
    mask = np.zeros((h, w), dtype=bool)
    values = np.zeros((h, w))
    for k in range(streak_len):
        rows = slice(k, h)
        src = slice(0, h - k)
        sel = seeds[src]
        sub_mask = mask[rows]
        sub_val = values[rows]
        sub_val[sel] = draws[src][sel]
        sub_mask[sel] = True
    return mask, values


def rain_noise(
    shape: tuple[int, int], density: float, streak_len: int, seed: int
) -> np.ndarray:
    """Sparse vertical streaks with normal intensities mapped into [0, 1]."""
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    if streak_len < 1:
        raise ValueError(f"streak_len must be >= 1, got {streak_len}")
    rng = np.random.default_rng(seed)
    mask, values = rain_draws(shape, density, streak_len, rng)
    out = np.zeros(shape)
    if mask.any():
        v = values[mask]
        lo, hi = v.min(), v.max()
        if hi > lo:
            out[mask] = (v - lo) / (hi - lo)
        else:
            out[mask] = 1.0
    return out


def overlay(base: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Pixelwise maximum of two equal-sized images."""
    base = _check_image(base)
    noise = _check_image(noise)
    if base.shape != noise.shape:
        raise ValueError(f"shape mismatch: {base.shape} vs {noise.shape}")
    return np.clip(np.maximum(base, noise), 0.0, 1.0)


def normalize_unit(img: np.ndarray) -> np.ndarray:
    """Affine map of [min, max] onto [0, 1]; constant images map to zeros."""
    img = _check_image(img)
    lo, hi = img.min(), img.max()
    if hi <= lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def random_crop(img: np.ndarray, size: tuple[int, int], seed: int) -> np.ndarray:
    """Contiguous window at a seed-determined uniform offset."""
    img = _check_image(img)
    ch, cw = size
    h, w = img.shape
    if ch > h or cw > w or ch < 1 or cw < 1:
        raise ValueError(f"crop {size} does not fit image {img.shape}")
    rng = np.random.default_rng(seed)
    top = int(rng.integers(0, h - ch + 1))
    left = int(rng.integers(0, w - cw + 1))
    return img[top : top + ch, left : left + cw].copy()


def augment(img: np.ndarray, op_id: int) -> np.ndarray:
    """Apply one of the 8 dihedral symmetries (exact pixel permutation)."""
    img = _check_image(img)
    if op_id not in D4_IDS:
        raise ValueError(f"op_id must be in 0..7, got {op_id}")
    if op_id >= 4:
        img = np.fliplr(img)
    return np.rot90(img, k=op_id % 4).copy()


def load_png(path) -> np.ndarray:
    """Read an 8-bit grayscale PNG as a unit-interval image."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return arr / 255.0


def save_png(img: np.ndarray, path) -> None:
    """Write a unit-interval image as an 8-bit grayscale PNG."""
    img = _check_image(img)
    arr = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")
