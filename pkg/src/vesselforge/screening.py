"""Histogram-based quality gate for forged images.

Images are classified good/bad by inverse-Euclidean similarity between
their 256-bin intensity histogram and two fixed centroids built from
manually selected good and bad examples. Nearest-centroid assignment
with fixed centroids; no iterative re-centering.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import imageops
from .phantom import DatasetManifest

SIM_EPS = 1e-12


def histogram256(img: np.ndarray) -> np.ndarray:
    """Normalized 256-bin histogram; bin k holds pixels with floor(v*255.999) = k."""
    bins = np.floor(np.asarray(img, dtype=np.float64) * 255.999).astype(np.int64)
    bins = np.clip(bins, 0, 255)
    counts = np.bincount(bins.ravel(), minlength=256).astype(np.float64)
    return counts / counts.sum()


@dataclass
class ScreeningStandards:
    good: np.ndarray
    bad: np.ndarray
    source_ids: dict = field(default_factory=lambda: {"good": [], "bad": []})

    def to_json(self) -> str:
        return json.dumps(
            {
                "good": list(self.good),
                "bad": list(self.bad),
                "source_ids": self.source_ids,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ScreeningStandards":
        doc = json.loads(text)
        return cls(
            good=np.asarray(doc["good"]),
            bad=np.asarray(doc["bad"]),
            source_ids=doc.get("source_ids", {}),
        )


def build_standards(
    good_imgs, bad_imgs, good_ids=None, bad_ids=None
) -> ScreeningStandards:
    """Centroids as the mean of the normalized per-image histograms."""
    if not good_imgs or not bad_imgs:
        raise ValueError("both standard lists must be non-empty")
    good = np.mean([histogram256(im) for im in good_imgs], axis=0)
    bad = np.mean([histogram256(im) for im in bad_imgs], axis=0)
    if np.linalg.norm(good - bad) == 0.0:
        raise ValueError(
            "good and bad centroids are identical; pick more distinctive standards"
        )
    return ScreeningStandards(
        good=good,
        bad=bad,
        source_ids={"good": list(good_ids or []), "bad": list(bad_ids or [])},
    )


def similarity(h_n: np.ndarray, h_ref: np.ndarray) -> float:
    """Inverse Euclidean histogram distance, floored at SIM_EPS."""
    dist = float(np.sqrt(np.sum(np.abs(h_n - h_ref) ** 2)))
    return 1.0 / max(dist, SIM_EPS)


def classify(img: np.ndarray, std: ScreeningStandards) -> str:
    """'good' iff strictly more similar to the good centroid; ties are 'bad'."""
    h = histogram256(img)
    s_g = similarity(h, std.good)
    s_b = similarity(h, std.bad)
    return "good" if s_g > s_b else "bad"


def screen_dataset(
    manifest: DatasetManifest, root: str, std: ScreeningStandards
) -> tuple[DatasetManifest, list[dict]]:
    """Keep good entries; report per-image similarities and verdicts."""
    kept = DatasetManifest(scale=manifest.scale)
    report = []
    for e in manifest.entries:
        try:
            img = imageops.load_png(os.path.join(root, e.hr_path))
        except OSError as exc:
            report.append(
                {"id": e.id, "s_good": "", "s_bad": "", "verdict": f"error: {exc}"}
            )
            continue
        h = histogram256(img)
        s_g = similarity(h, std.good)
        s_b = similarity(h, std.bad)
        verdict = "good" if s_g > s_b else "bad"
        report.append(
            {"id": e.id, "s_good": f"{s_g:.6g}", "s_bad": f"{s_b:.6g}", "verdict": verdict}
        )
        if verdict == "good":
            kept.entries.append(e)
    return kept, report


def save_report(report: list[dict], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["id", "s_good", "s_bad", "verdict"])
        writer.writeheader()
        writer.writerows(report)
