"""Quantitative evaluation: PSNR, SSIM, Frechet distance over a fixed
hand-crafted feature extractor, and adjacent-frame consistency for video.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB (peak 1.0), capped at 100."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((np.asarray(a, float) - np.asarray(b, float)) ** 2))
    if mse <= 10.0 ** (-PSNR_CAP_DB / 10.0):
        return PSNR_CAP_DB
    return 10.0 * np.log10(1.0 / mse)


def _ssim_window() -> np.ndarray:
    d = np.arange(SSIM_WINDOW) - (SSIM_WINDOW - 1) / 2.0
    g = np.exp(-(d**2) / (2.0 * SSIM_SIGMA**2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), L = 1."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"image {a.shape} smaller than {SSIM_WINDOW}x{SSIM_WINDOW} window")
    w = _ssim_window()

    def filt(x):
        win = np.lib.stride_tricks.sliding_window_view(x, (SSIM_WINDOW, SSIM_WINDOW))
        return np.einsum("ijkl,kl->ij", win, w)

    mu_a, mu_b = filt(a), filt(b)
    saa = filt(a * a) - mu_a**2
    sbb = filt(b * b) - mu_b**2
    sab = filt(a * b) - mu_a * mu_b
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (saa + sbb + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class FeatureExtractor:
    """Deterministic 64-dim descriptor: 4x4 pooled means, 16-bin intensity
    histogram, 16-bin gradient-orientation histogram, and quadrant
    variances at four dyadic scales."""

    descriptor_id: str = "handcrafted-v1"
    dim: int = 64


def _block_reduce(img: np.ndarray, s: int) -> np.ndarray:
    h, w = img.shape
    hh, ww = h - h % s, w - w % s
    r = img[:hh, :ww].reshape(hh // s, s, ww // s, s)
    return r.mean(axis=(1, 3))


def _quadrant_vars(img: np.ndarray) -> list[float]:
    h, w = img.shape
    hm, wm = h // 2, w // 2
    quads = [img[:hm, :wm], img[:hm, wm:], img[hm:, :wm], img[hm:, wm:]]
    return [float(np.var(q)) for q in quads]


def extract_features(img: np.ndarray, fx: FeatureExtractor | None = None) -> np.ndarray:
    """64-dim deterministic feature vector of a unit-interval image."""
    img = np.asarray(img, float)
    # 4x4 grid of pooled means.
    h, w = img.shape
    pooled = [
        float(np.mean(img[i * h // 4 : (i + 1) * h // 4, j * w // 4 : (j + 1) * w // 4]))
        for i in range(4)
        for j in range(4)
    ]
    # 16-bin intensity histogram (frequencies).
    bins = np.clip(np.floor(img * 15.999).astype(np.int64), 0, 15)
    hist = np.bincount(bins.ravel(), minlength=16).astype(float) / img.size
    # 16-bin gradient-orientation histogram weighted by magnitude.
    gy, gx = np.gradient(img)
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), 2 * np.pi)
    obins = np.clip((ang / (2 * np.pi) * 16).astype(np.int64), 0, 15)
    ohist = np.zeros(16)
    np.add.at(ohist, obins.ravel(), mag.ravel())
    total = ohist.sum()
    if total > 0:
        ohist /= total
    # Quadrant variances at four dyadic scales.
    var_feats = []
    for s in (1, 2, 4, 8):
        var_feats.extend(_quadrant_vars(_block_reduce(img, s)))
    return np.concatenate([pooled, hist, ohist, var_feats])


@dataclass(frozen=True)
class FeatureStats:
    mu: np.ndarray
    sigma: np.ndarray
    n: int


def feature_stats(vectors: np.ndarray) -> FeatureStats:
    """Mean and unbiased covariance of a (n, d) feature matrix."""
    vectors = np.asarray(vectors, float)
    if vectors.shape[0] < 2:
        raise ValueError("need at least 2 samples for covariance")
    mu = vectors.mean(axis=0)
    sigma = np.cov(vectors, rowvar=False, ddof=1)
    return FeatureStats(mu=mu, sigma=np.atleast_2d(sigma), n=vectors.shape[0])


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: FeatureStats, b: FeatureStats) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The product square root is evaluated on the symmetrized form
    sqrt(S_a) S_b sqrt(S_a), with eigenvalues clamped at zero.
    """
    if a.mu.shape != b.mu.shape:
        raise ValueError("feature dims differ")
    if not (np.all(np.isfinite(a.mu)) and np.all(np.isfinite(b.mu))
            and np.all(np.isfinite(a.sigma)) and np.all(np.isfinite(b.sigma))):
        raise ValueError("non-finite feature statistics")
    diff = float(np.sum((a.mu - b.mu) ** 2))
    sa_root = _sqrtm_psd(a.sigma)
    inner = sa_root @ b.sigma @ sa_root
    vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    trace_term = float(np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * np.sum(np.sqrt(vals)))
    return max(diff + trace_term, 0.0)


def fid_of_sets(imgs_a, imgs_b, fx: FeatureExtractor | None = None) -> float:
    """Frechet distance between Gaussian fits of two image sets' features."""
    fx = fx or FeatureExtractor()
    if len(imgs_a) < fx.dim // 2 or len(imgs_b) < fx.dim // 2:
        raise ValueError(
            f"each set needs at least {fx.dim // 2} images for a usable covariance"
        )
    fa = np.stack([extract_features(im, fx) for im in imgs_a])
    fb = np.stack([extract_features(im, fx) for im in imgs_b])
    return frechet_distance(feature_stats(fa), feature_stats(fb))


def temporal_consistency(frames) -> float:
    """Mean adjacent-frame PSNR of a sequence."""
    if len(frames) < 2:
        raise ValueError("need at least 2 frames")
    return float(np.mean([psnr(frames[i], frames[i + 1]) for i in range(len(frames) - 1)]))
