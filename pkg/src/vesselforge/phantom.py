"""Procedural branching-vessel phantoms and dataset bookkeeping.

Phantoms stand in for real angiography acquisitions: seeded random walks
rendered as anti-aliased strokes, with stroke width shrinking at each
branch so the structure repeats across scales.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import imageops

MAX_WALK_STEPS = 4096


@dataclass(frozen=True)
class PhantomParams:
    root_count: int = 3
    branch_prob: float = 0.06
    width_decay: float = 0.72
    min_width: float = 1.0
    wander: float = 0.22
    intensity_falloff: float = 0.5
    root_width: float = 3.2

    def __post_init__(self):
        if not 0.0 <= self.branch_prob <= 1.0:
            raise ValueError(f"branch_prob must be in [0,1], got {self.branch_prob}")
        if not 0.0 < self.width_decay < 1.0:
            raise ValueError(f"width_decay must be in (0,1), got {self.width_decay}")
        if self.min_width < 1.0:
            raise ValueError(f"min_width must be >= 1, got {self.min_width}")


def _stamp(img: np.ndarray, cx: float, cy: float, radius: float, value: float) -> None:
    """Max-composite an anti-aliased disk onto the accumulator."""
    h, w = img.shape
    r = max(radius, 0.5)
    y0, y1 = int(np.floor(cy - r - 1)), int(np.ceil(cy + r + 1))
    x0, x1 = int(np.floor(cx - r - 1)), int(np.ceil(cx + r + 1))
    y0, y1 = max(y0, 0), min(y1 + 1, h)
    x0, x1 = max(x0, 0), min(x1 + 1, w)
    if y0 >= y1 or x0 >= x1:
        return
    yy, xx = np.mgrid[y0:y1, x0:x1]
    dist = np.hypot(yy - cy, xx - cx)
    cover = np.clip(r + 0.5 - dist, 0.0, 1.0)
    patch = img[y0:y1, x0:x1]
    np.maximum(patch, cover * value, out=patch)


def generate_phantom(
    size: tuple[int, int], params: PhantomParams, seed: int
) -> np.ndarray:
    """Render a branching-vessel phantom; deterministic per seed."""
    h, w = size
    if h < 16 or w < 16:
        raise ValueError(f"size must be at least 16x16, got {size}")
    rng = np.random.default_rng(seed)
    img = np.zeros((h, w))
    # Walkers: (y, x, heading, width). Roots start on a border edge aiming in.
    walkers = []
    for _ in range(params.root_count):
        edge = int(rng.integers(0, 4))
        u = float(rng.uniform(0.15, 0.85))
        if edge == 0:
            y, x, heading = 0.0, u * w, np.pi / 2
        elif edge == 1:
            y, x, heading = float(h - 1), u * w, -np.pi / 2
        elif edge == 2:
            y, x, heading = u * h, 0.0, 0.0
        else:
            y, x, heading = u * h, float(w - 1), np.pi
        heading += float(rng.normal(0.0, 0.3))
        walkers.append((y, x, heading, params.root_width))
    steps = 0
    while walkers and steps < MAX_WALK_STEPS:
        y, x, heading, width = walkers.pop()
        while width >= params.min_width and steps < MAX_WALK_STEPS:
            steps += 1
            value = (width / params.root_width) ** params.intensity_falloff
            _stamp(img, x, y, width / 2.0, value)
            heading += float(rng.normal(0.0, params.wander))
            x += np.cos(heading)
            y += np.sin(heading)
            if not (0 <= y < h and 0 <= x < w):
                break
            if rng.random() < params.branch_prob:
                child_heading = heading + float(rng.choice([-1.0, 1.0])) * float(
                    rng.uniform(0.4, 0.9)
                )
                width *= params.width_decay
                walkers.append((y, x, child_heading, width))
    return np.clip(img, 0.0, 1.0)


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    hr_path: str
    lr_path: str
    split: str
    provenance: str  # "authentic" or "forged"


@dataclass
class DatasetManifest:
    scale: int
    entries: list[ManifestEntry] = field(default_factory=list)

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def to_json(self) -> str:
        doc = {
            "scale": self.scale,
            "entries": [dataclasses.asdict(e) for e in self.entries],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        doc = json.loads(text)
        entries = [ManifestEntry(**e) for e in doc["entries"]]
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest ids are not unique")
        return cls(scale=int(doc["scale"]), entries=entries)

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        with open(path) as f:
            return cls.from_json(f.read())


def make_pair(hr: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Bicubic 1/N downsample paired with its source image."""
    if hr.shape[0] % n or hr.shape[1] % n:
        raise ValueError(f"dims {hr.shape} not divisible by {n}")
    return imageops.resample(hr, 1.0 / n), hr


def split_counts(count: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    """Largest-remainder apportionment of `count` over (train, val, test)."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    raw = [count * f for f in fractions]
    base = [int(np.floor(r)) for r in raw]
    rem = count - sum(base)
    order = sorted(range(3), key=lambda i: raw[i] - base[i], reverse=True)
    for i in order[:rem]:
        base[i] += 1
    return tuple(base)


def build_dataset(
    count: int,
    splits: tuple[float, float, float],
    size: tuple[int, int],
    n: int,
    seed: int,
    out_dir: str,
    params: PhantomParams | None = None,
) -> DatasetManifest:
    """Generate phantoms, write HR/LR PNG pairs, and return the manifest.

    Per-image seeds derive from the master seed; split assignment is a
    seed-determined permutation, so two runs with the same arguments
    produce identical manifests and files.
    """
    params = params or PhantomParams()
    n_train, n_val, n_test = split_counts(count, splits)
    labels = ["train"] * n_train + ["val"] * n_val + ["test"] * n_test
    rng = np.random.default_rng(seed)
    labels = [labels[i] for i in rng.permutation(count)]
    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)
    manifest = DatasetManifest(scale=n)
    for i in range(count):
        hr = generate_phantom(size, params, seed=seed * 1_000_003 + i)
        lr, hr = make_pair(hr, n)
        hr_rel = os.path.join("images", f"{i:04d}_hr.png")
        lr_rel = os.path.join("images", f"{i:04d}_lr.png")
        try:
            imageops.save_png(hr, os.path.join(out_dir, hr_rel))
            imageops.save_png(lr, os.path.join(out_dir, lr_rel))
        except OSError as exc:
            raise OSError(f"failed writing dataset image under {img_dir}: {exc}") from exc
        manifest.entries.append(
            ManifestEntry(
                id=f"{i:04d}",
                hr_path=hr_rel,
                lr_path=lr_rel,
                split=labels[i],
                provenance="authentic",
            )
        )
    manifest.save(os.path.join(out_dir, "manifest.json"))
    return manifest


def load_pairs(manifest: DatasetManifest, root: str, split: str):
    """Load (lr, hr) image pairs for one split."""
    pairs = []
    for e in manifest.split_entries(split):
        lr = imageops.load_png(os.path.join(root, e.lr_path))
        hr = imageops.load_png(os.path.join(root, e.hr_path))
        pairs.append((lr, hr))
    return pairs
