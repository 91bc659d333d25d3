import os

import numpy as np
import pytest

from vesselforge import imageops, phantom, screening
from vesselforge.screening import (
    ScreeningStandards,
    build_standards,
    classify,
    histogram256,
    screen_dataset,
    similarity,
)


class TestHistogram256:
    def test_constant_zero(self):
        h = histogram256(np.zeros((4, 4)))
        assert h[0] == 1.0 and h[1:].sum() == 0.0

    def test_two_pixel_extremes(self):
        h = histogram256(np.array([[0.0, 1.0]]))
        assert h[0] == 0.5 and h[255] == 0.5

    def test_normalized(self):
        h = histogram256(np.random.default_rng(0).random((16, 16)))
        assert abs(h.sum() - 1.0) < 1e-9


class TestBuildStandards:
    def test_identical_sources_rejected(self):
        img = np.random.default_rng(1).random((8, 8))
        with pytest.raises(ValueError):
            build_standards([img], [img.copy()])

    def test_copies_collapse_to_single_histogram(self):
        img = np.random.default_rng(2).random((8, 8))
        other = np.clip(img + 0.3, 0, 1)
        std = build_standards([img] * 10, [other] * 10)
        np.testing.assert_allclose(std.good, histogram256(img), atol=1e-12)

    def test_centroid_is_elementwise_average(self):
        # 4-pixel toys with known bins.
        a = np.array([[0.0, 0.0], [1.0, 1.0]])  # bins 0, 255 at 0.5 each
        b = np.array([[0.0, 0.0], [0.0, 1.0]])  # bin 0 at 0.75, bin 255 at 0.25
        bad = np.full((2, 2), 0.5)
        std = build_standards([a, b], [bad])
        assert std.good[0] == pytest.approx((0.5 + 0.75) / 2)
        assert std.good[255] == pytest.approx((0.5 + 0.25) / 2)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            build_standards([], [np.zeros((2, 2))])


class TestSimilarity:
    def test_identical_saturates(self):
        h = histogram256(np.random.default_rng(3).random((8, 8)))
        assert similarity(h, h) == 1e12

    def test_two_point_distance(self):
        h0 = np.zeros(256)
        h0[0] = 1.0
        h255 = np.zeros(256)
        h255[255] = 1.0
        assert similarity(h0, h255) == pytest.approx(1.0 / np.sqrt(2.0))

    def test_matches_straight_line_transcription(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            a = histogram256(rng.random((8, 8)))
            b = histogram256(rng.random((8, 8)))
            ref = 1.0 / max(np.sqrt(sum(abs(a[i] - b[i]) ** 2 for i in range(256))), 1e-12)
            assert abs(similarity(a, b) - ref) <= 1e-12

    def test_symmetric_and_monotone(self):
        rng = np.random.default_rng(5)
        a = histogram256(rng.random((8, 8)))
        b = histogram256(rng.random((8, 8)))
        assert similarity(a, b) == similarity(b, a)
        # Similarity strictly decreases as distance grows.
        base = np.zeros(256)
        base[0] = 1.0
        sims = []
        for frac in (0.1, 0.2, 0.4):
            h = np.zeros(256)
            h[0] = 1.0 - frac
            h[255] = frac
            sims.append(similarity(base, h))
        assert sims[0] > sims[1] > sims[2]


class TestClassify:
    def test_own_standard_is_good(self):
        img = np.random.default_rng(6).random((8, 8))
        other = np.clip(img * 0.5, 0, 1)
        std = build_standards([img], [other])
        assert classify(img, std) == "good"

    def test_tie_is_bad(self):
        h_g = np.zeros(256)
        h_g[0] = 1.0
        h_b = np.zeros(256)
        h_b[255] = 1.0
        std = ScreeningStandards(good=h_g, bad=h_b)
        midpoint = np.array([[0.0, 1.0]])  # equidistant histogram
        assert classify(midpoint, std) == "bad"

    def test_noisy_phantom_is_bad(self):
        clean = [phantom.generate_phantom((64, 64), phantom.PhantomParams(), s) for s in range(10)]
        noisy = [
            imageops.overlay(c, imageops.rain_noise((64, 64), 0.6, 3, seed=s))
            for s, c in enumerate(clean)
        ]
        std = build_standards(clean, noisy)
        probe = imageops.overlay(
            phantom.generate_phantom((64, 64), phantom.PhantomParams(), 99),
            imageops.rain_noise((64, 64), 0.6, 3, seed=99),
        )
        assert classify(probe, std) == "bad"

    def test_invariant_under_augment(self):
        img = np.random.default_rng(7).random((8, 8))
        std = build_standards([img], [np.clip(img + 0.2, 0, 1)])
        verdicts = {classify(imageops.augment(img, op), std) for op in imageops.D4_IDS}
        assert verdicts == {"good"}


class TestScreenDataset:
    def _write_dataset(self, tmp_path, images):
        img_dir = tmp_path / "images"
        img_dir.mkdir(exist_ok=True)
        manifest = phantom.DatasetManifest(scale=4)
        for i, img in enumerate(images):
            rel = os.path.join("images", f"{i:04d}_hr.png")
            lrel = os.path.join("images", f"{i:04d}_lr.png")
            imageops.save_png(img, tmp_path / rel)
            imageops.save_png(img[::4, ::4], tmp_path / lrel)
            manifest.entries.append(
                phantom.ManifestEntry(f"{i:04d}", rel, lrel, "train", "forged")
            )
        return manifest

    def test_all_good_kept(self, tmp_path):
        rng = np.random.default_rng(8)
        imgs = [np.clip(rng.random((16, 16)) * 0.2, 0, 1) for _ in range(5)]
        manifest = self._write_dataset(tmp_path, imgs)
        std = build_standards(imgs[:2], [np.full((16, 16), 0.9)])
        kept, report = screen_dataset(manifest, str(tmp_path), std)
        assert len(kept.entries) == 5
        assert len(report) == 5

    def test_empty_manifest(self, tmp_path):
        std = build_standards([np.zeros((4, 4))], [np.ones((4, 4))])
        kept, report = screen_dataset(phantom.DatasetManifest(scale=4), str(tmp_path), std)
        assert kept.entries == [] and report == []

    def test_mixed_batch_kept_fraction(self, tmp_path):
        clean = [phantom.generate_phantom((64, 64), phantom.PhantomParams(), s) for s in range(20)]
        noisy = [
            imageops.overlay(c, imageops.rain_noise((64, 64), 0.6, 3, seed=200 + s))
            for s, c in enumerate(clean)
        ]
        manifest = self._write_dataset(tmp_path, clean + noisy)
        std = build_standards(
            [phantom.generate_phantom((64, 64), phantom.PhantomParams(), 500 + s) for s in range(10)],
            [
                imageops.overlay(
                    phantom.generate_phantom((64, 64), phantom.PhantomParams(), 600 + s),
                    imageops.rain_noise((64, 64), 0.6, 3, seed=600 + s),
                )
                for s in range(10)
            ],
        )
        kept, report = screen_dataset(manifest, str(tmp_path), std)
        frac = len(kept.entries) / len(manifest.entries)
        assert 0.4 <= frac <= 0.6
        assert len(report) == len(manifest.entries)

    def test_unreadable_file_recorded(self, tmp_path):
        manifest = phantom.DatasetManifest(scale=4)
        manifest.entries.append(
            phantom.ManifestEntry("0000", "missing.png", "missing_lr.png", "train", "forged")
        )
        std = build_standards([np.zeros((4, 4))], [np.ones((4, 4))])
        kept, report = screen_dataset(manifest, str(tmp_path), std)
        assert kept.entries == []
        assert report[0]["verdict"].startswith("error")

    def test_report_csv(self, tmp_path):
        screening.save_report(
            [{"id": "a", "s_good": "1", "s_bad": "2", "verdict": "bad"}],
            tmp_path / "r.csv",
        )
        lines = (tmp_path / "r.csv").read_text().strip().splitlines()
        assert lines[0] == "id,s_good,s_bad,verdict"


def test_standards_json_roundtrip():
    std = build_standards(
        [np.random.default_rng(0).random((8, 8))],
        [np.random.default_rng(1).random((8, 8)) * 0.3],
        good_ids=["g0"],
        bad_ids=["b0"],
    )
    back = ScreeningStandards.from_json(std.to_json())
    np.testing.assert_array_equal(back.good, std.good)
    np.testing.assert_array_equal(back.bad, std.bad)
    assert back.source_ids == std.source_ids
