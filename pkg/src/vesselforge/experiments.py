"""Ablation runner: how SR quality moves with forged-set size and with
the number of authentic images behind the generator.

Points run sequentially with fixed seeds so a sweep is reproducible.
"""

from __future__ import annotations

import os

import numpy as np

from . import diffusion, doodle, imageops, metrics, phantom, superres


def _subset_manifest(manifest: phantom.DatasetManifest, count: int) -> phantom.DatasetManifest:
    sub = phantom.DatasetManifest(scale=manifest.scale)
    sub.entries = manifest.entries[:count]
    if len(sub.entries) < count:
        raise ValueError(f"requested {count} entries, only {len(manifest.entries)} available")
    return sub


def _eval_model(model, manifest: phantom.DatasetManifest, root: str, split: str):
    pairs = phantom.load_pairs(manifest, root, split)
    if not pairs:
        raise ValueError(f"no '{split}' images to evaluate on")
    psnrs, ssims = [], []
    for lr, hr in pairs:
        out = superres.infer_sr(model, lr)
        psnrs.append(metrics.psnr(out, hr))
        ssims.append(metrics.ssim(out, hr))
    return float(np.mean(psnrs)), float(np.mean(ssims))


def run_ablation(spec: dict, out_dir: str) -> list[dict]:
    """Execute the sweep described by `spec`; returns one row per point.

    Spec keys: authentic_data (required; supplies the evaluation split),
    forged_data + forged_counts for the forged-size sweep,
    authentic_counts (+ forge_count) for the generator-data sweep,
    plus sr/gen training knobs.
    """
    auth_dir = spec["authentic_data"]
    auth_manifest = phantom.DatasetManifest.load(os.path.join(auth_dir, "manifest.json"))
    eval_split = spec.get("eval_split", "test")
    seed = int(spec.get("seed", 0))
    sr_cfg_base = dict(
        scale=auth_manifest.scale,
        epochs=int(spec.get("epochs_sr", 40)),
        batch=int(spec.get("batch", 8)),
        lr=float(spec.get("lr", 2e-3)),
        seed=seed,
    )
    rows = []
    for count in spec.get("forged_counts", []):
        forged_dir = spec["forged_data"]
        forged = phantom.DatasetManifest.load(os.path.join(forged_dir, "manifest.json"))
        sub = _subset_manifest(forged, int(count))
        model, _ = superres.train_sr(sub, forged_dir, superres.SrTrainConfig(**sr_cfg_base))
        p, s = _eval_model(model, auth_manifest, auth_dir, eval_split)
        rows.append({"variable": "forged_count", "count": int(count), "psnr_db": p, "ssim": s})
    for count in spec.get("authentic_counts", []):
        sub = phantom.DatasetManifest(scale=auth_manifest.scale)
        train = auth_manifest.split_entries("train")[: int(count)]
        if len(train) < int(count):
            raise ValueError(f"only {len(train)} authentic train images available")
        sub.entries = train
        sched = diffusion.make_schedule(T=int(spec.get("steps", diffusion.DEFAULT_T)))
        gen_cfg = diffusion.TrainConfig(
            epochs=int(spec.get("epochs_gen", 40)),
            batch=int(spec.get("batch", 8)),
            lr=float(spec.get("lr", 2e-3)),
            seed=seed,
        )
        gen, _ = diffusion.train_denoiser(sub, auth_dir, sched, gen_cfg)
        # Forge a fixed-size training set from crop conditions over the subset.
        forge_count = int(spec.get("forge_count", 32))
        point_dir = os.path.join(out_dir, f"authentic_{count}")
        img_dir = os.path.join(point_dir, "images")
        os.makedirs(img_dir, exist_ok=True)
        forged = phantom.DatasetManifest(scale=auth_manifest.scale)
        n = auth_manifest.scale
        srcs = [
            imageops.load_png(os.path.join(auth_dir, e.hr_path)) for e in train
        ]
        for i in range(forge_count):
            cfg = doodle.DoodleConfig(n=n, seed=seed + i)
            src = srcs[i % len(srcs)]
            crop = (src.shape[0] // n, src.shape[1] // n)
            condition = doodle.prepare_crop_condition(src, crop, cfg)
            img = doodle.forge(gen, condition, sched, seed + i)
            lr, hr = phantom.make_pair(img, n)
            hr_rel = os.path.join("images", f"{i:04d}_hr.png")
            lr_rel = os.path.join("images", f"{i:04d}_lr.png")
            imageops.save_png(hr, os.path.join(point_dir, hr_rel))
            imageops.save_png(lr, os.path.join(point_dir, lr_rel))
            forged.entries.append(
                phantom.ManifestEntry(
                    id=f"{i:04d}", hr_path=hr_rel, lr_path=lr_rel,
                    split="train", provenance="forged",
                )
            )
        forged.save(os.path.join(point_dir, "manifest.json"))
        model, _ = superres.train_sr(forged, point_dir, superres.SrTrainConfig(**sr_cfg_base))
        p, s = _eval_model(model, auth_manifest, auth_dir, eval_split)
        rows.append({"variable": "authentic_count", "count": int(count), "psnr_db": p, "ssim": s})
    return rows
