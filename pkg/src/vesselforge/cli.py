"""Command-line surface for every pipeline stage.

Each subcommand maps to one library operation, takes an explicit seed,
and drops a provenance JSON next to its outputs so any stage can be
re-run byte-identically with `replay`.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import __version__, diffusion, doodle, imageops, metrics, nn, phantom, screening, superres


def _write_provenance(out_dir: str, command: str, args: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    doc = {"command": command, "args": args, "version": __version__}
    with open(os.path.join(out_dir, "provenance.json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


@click.group()
def cli():
    """Vessel-image forgery and super-resolution pipeline."""


@cli.command("phantom")
@click.option("--count", type=int, default=64, show_default=True)
@click.option("--size", type=int, default=64, show_default=True)
@click.option("--scale", "scale_n", type=int, default=4, show_default=True)
@click.option("--splits", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def phantom_cmd(count, size, scale_n, splits, seed, out_dir):
    """Generate a phantom dataset with HR/LR pairs and a manifest."""
    fracs = tuple(float(x) for x in splits.split(","))
    if len(fracs) != 3:
        raise click.UsageError("--splits needs three comma-separated fractions")
    phantom.build_dataset(count, fracs, (size, size), scale_n, seed, out_dir)
    _write_provenance(
        out_dir,
        "phantom",
        {"count": count, "size": size, "scale": scale_n, "splits": splits, "seed": seed},
    )
    click.echo(f"wrote {count} phantom pairs to {out_dir}")


@cli.command("train-gen")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--epochs", type=int, default=40, show_default=True)
@click.option("--batch", type=int, default=8, show_default=True)
@click.option("--lr", type=float, default=2e-3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--steps", "schedule_t", type=int, default=diffusion.DEFAULT_T, show_default=True)
@click.option("--channels", type=int, default=8, show_default=True)
def train_gen_cmd(data_dir, out_dir, epochs, batch, lr, seed, schedule_t, channels):
    """Train the diffusion generator on a phantom dataset."""
    manifest = phantom.DatasetManifest.load(os.path.join(data_dir, "manifest.json"))
    sched = diffusion.make_schedule(T=schedule_t)
    cfg = diffusion.TrainConfig(
        epochs=epochs, batch=batch, lr=lr, seed=seed, base_channels=channels
    )
    model, history = diffusion.train_denoiser(manifest, data_dir, sched, cfg)
    os.makedirs(out_dir, exist_ok=True)
    nn.save_checkpoint(model, os.path.join(out_dir, "generator.ckpt"))
    diffusion.save_loss_history(history, os.path.join(out_dir, "loss.csv"))
    _write_provenance(
        out_dir,
        "train-gen",
        {
            "data": os.path.abspath(data_dir),
            "epochs": epochs,
            "batch": batch,
            "lr": lr,
            "seed": seed,
            "steps": schedule_t,
            "channels": channels,
        },
    )
    click.echo(f"generator trained; final loss {history[-1]:.4f}")


@cli.command("forge")
@click.option("--generator", "gen_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--count", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--doodle", "doodle_png", type=click.Path(exists=True), default=None,
              help="Doodle PNG used as the trunk of every condition.")
@click.option("--source-data", type=click.Path(exists=True), default=None,
              help="Phantom dataset whose train HR images supply crop conditions.")
@click.option("--density", type=float, default=0.05, show_default=True)
@click.option("--streak-len", type=int, default=4, show_default=True)
@click.option("--blur-sigma", type=float, default=1.0, show_default=True)
@click.option("--steps", "schedule_t", type=int, default=diffusion.DEFAULT_T, show_default=True)
def forge_cmd(gen_path, out_dir, count, seed, doodle_png, source_data, density,
              streak_len, blur_sigma, schedule_t):
    """Forge images from doodle or crop conditions; writes a forged dataset."""
    if (doodle_png is None) == (source_data is None):
        raise click.UsageError("provide exactly one of --doodle or --source-data")
    model = nn.load_checkpoint(gen_path)
    n = model.scale
    sched = diffusion.make_schedule(T=schedule_t)
    sources = []
    if doodle_png:
        sources = [imageops.load_png(doodle_png)]
        mode = "doodle"
    else:
        src_manifest = phantom.DatasetManifest.load(
            os.path.join(source_data, "manifest.json")
        )
        sources = [
            imageops.load_png(os.path.join(source_data, e.hr_path))
            for e in src_manifest.split_entries("train")
        ]
        if not sources:
            raise click.UsageError(f"{source_data} has no train images")
        mode = "crop"
    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)
    manifest = phantom.DatasetManifest(scale=n)
    for i in range(count):
        item_seed = seed + i
        cfg = doodle.DoodleConfig(
            n=n,
            noise=doodle.NoiseParams(density=density, streak_len=streak_len),
            blur_sigma=blur_sigma,
            seed=item_seed,
        )
        src = sources[i % len(sources)]
        if mode == "doodle":
            condition = doodle.prepare_doodle_condition(src, cfg)
        else:
            crop = (src.shape[0] // n, src.shape[1] // n)
            condition = doodle.prepare_crop_condition(src, crop, cfg)
        forged = doodle.forge(model, condition, sched, item_seed)
        lr, hr = phantom.make_pair(forged, n)
        hr_rel = os.path.join("images", f"{i:04d}_hr.png")
        lr_rel = os.path.join("images", f"{i:04d}_lr.png")
        imageops.save_png(hr, os.path.join(out_dir, hr_rel))
        imageops.save_png(lr, os.path.join(out_dir, lr_rel))
        with open(os.path.join(out_dir, "images", f"{i:04d}.json"), "w") as f:
            json.dump(
                {"seed": item_seed, "mode": mode, "density": density,
                 "streak_len": streak_len, "blur_sigma": blur_sigma, "n": n},
                f, sort_keys=True)
            f.write("\n")
        manifest.entries.append(
            phantom.ManifestEntry(
                id=f"{i:04d}", hr_path=hr_rel, lr_path=lr_rel,
                split="train", provenance="forged",
            )
        )
    manifest.save(os.path.join(out_dir, "manifest.json"))
    _write_provenance(
        out_dir,
        "forge",
        {
            "generator": os.path.abspath(gen_path),
            "count": count,
            "seed": seed,
            "doodle": os.path.abspath(doodle_png) if doodle_png else None,
            "source_data": os.path.abspath(source_data) if source_data else None,
            "density": density,
            "streak_len": streak_len,
            "blur_sigma": blur_sigma,
            "steps": schedule_t,
        },
    )
    click.echo(f"forged {count} images into {out_dir}")


@cli.command("screen")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--standards", "standards_path", type=click.Path(exists=True), default=None)
@click.option("--good-dir", type=click.Path(exists=True), default=None)
@click.option("--bad-dir", type=click.Path(exists=True), default=None)
def screen_cmd(data_dir, out_dir, standards_path, good_dir, bad_dir):
    """Filter a forged dataset by histogram similarity to standards."""
    if standards_path is None and (good_dir is None or bad_dir is None):
        raise click.UsageError("provide --standards or both --good-dir and --bad-dir")
    if standards_path:
        with open(standards_path) as f:
            std = screening.ScreeningStandards.from_json(f.read())
    else:
        def load_dir(d):
            names = sorted(x for x in os.listdir(d) if x.endswith(".png"))
            return [imageops.load_png(os.path.join(d, n)) for n in names], names
        good_imgs, good_ids = load_dir(good_dir)
        bad_imgs, bad_ids = load_dir(bad_dir)
        std = screening.build_standards(good_imgs, bad_imgs, good_ids, bad_ids)
    manifest = phantom.DatasetManifest.load(os.path.join(data_dir, "manifest.json"))
    kept, report = screening.screen_dataset(manifest, data_dir, std)
    os.makedirs(out_dir, exist_ok=True)
    # Kept entries keep pointing at the original image files.
    rebased = phantom.DatasetManifest(scale=kept.scale)
    for e in kept.entries:
        rebased.entries.append(
            phantom.ManifestEntry(
                id=e.id,
                hr_path=os.path.relpath(os.path.join(data_dir, e.hr_path), out_dir),
                lr_path=os.path.relpath(os.path.join(data_dir, e.lr_path), out_dir),
                split=e.split,
                provenance=e.provenance,
            )
        )
    rebased.save(os.path.join(out_dir, "manifest.json"))
    screening.save_report(report, os.path.join(out_dir, "report.csv"))
    with open(os.path.join(out_dir, "standards.json"), "w") as f:
        f.write(std.to_json() + "\n")
    _write_provenance(
        out_dir,
        "screen",
        {
            "data": os.path.abspath(data_dir),
            "standards": os.path.abspath(standards_path) if standards_path else None,
            "good_dir": os.path.abspath(good_dir) if good_dir else None,
            "bad_dir": os.path.abspath(bad_dir) if bad_dir else None,
        },
    )
    click.echo(f"kept {len(kept.entries)}/{len(manifest.entries)} images")


@cli.command("train-sr")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--scale", "scale_n", type=int, default=4, show_default=True)
@click.option("--alpha", type=float, default=None, help="Weight-regularization strength.")
@click.option("--epochs", type=int, default=60, show_default=True)
@click.option("--batch", type=int, default=8, show_default=True)
@click.option("--lr", type=float, default=2e-3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--augment/--no-augment", default=True, show_default=True)
@click.option("--channels", type=int, default=10, show_default=True)
def train_sr_cmd(data_dir, out_dir, scale_n, alpha, epochs, batch, lr, seed, augment, channels):
    """Train the super-resolution model on a (screened) dataset."""
    manifest = phantom.DatasetManifest.load(os.path.join(data_dir, "manifest.json"))
    cfg = superres.SrTrainConfig(
        scale=scale_n, alpha=alpha, epochs=epochs, batch=batch, lr=lr,
        seed=seed, augment=augment, base_channels=channels,
    )
    model, history = superres.train_sr(manifest, data_dir, cfg)
    os.makedirs(out_dir, exist_ok=True)
    nn.save_checkpoint(model, os.path.join(out_dir, "sr.ckpt"))
    diffusion.save_loss_history(history, os.path.join(out_dir, "loss.csv"))
    _write_provenance(
        out_dir,
        "train-sr",
        {
            "data": os.path.abspath(data_dir),
            "scale": scale_n,
            "alpha": alpha,
            "epochs": epochs,
            "batch": batch,
            "lr": lr,
            "seed": seed,
            "augment": augment,
            "channels": channels,
        },
    )
    click.echo(f"SR model trained; final loss {history[-1]:.4f}")


@cli.command("infer")
@click.option("--sr", "sr_path", required=True, type=click.Path(exists=True))
@click.option("--input", "in_png", required=True, type=click.Path(exists=True))
@click.option("--out", "out_png", required=True, type=click.Path())
def infer_cmd(sr_path, in_png, out_png):
    """Super-resolve a single LR PNG."""
    model = nn.load_checkpoint(sr_path)
    out = superres.infer_sr(model, imageops.load_png(in_png))
    out_dir = os.path.dirname(os.path.abspath(out_png))
    os.makedirs(out_dir, exist_ok=True)
    imageops.save_png(out, out_png)
    _write_provenance(
        out_dir, "infer", {"sr": os.path.abspath(sr_path), "input": os.path.abspath(in_png),
                           "out_name": os.path.basename(out_png)},
    )
    click.echo(f"wrote {out_png}")


@cli.command("eval")
@click.option("--pred", "pred_dir", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_csv", required=True, type=click.Path())
def eval_cmd(pred_dir, gt_dir, out_csv):
    """Per-image PSNR/SSIM between matching PNG names in two directories."""
    names = sorted(x for x in os.listdir(pred_dir) if x.endswith(".png"))
    rows = []
    for name in names:
        gt_path = os.path.join(gt_dir, name)
        if not os.path.exists(gt_path):
            raise FileNotFoundError(f"no ground truth for {name}")
        a = imageops.load_png(os.path.join(pred_dir, name))
        b = imageops.load_png(gt_path)
        rows.append((name, metrics.psnr(a, b), metrics.ssim(a, b)))
    with open(out_csv, "w") as f:
        f.write("id,psnr_db,ssim\n")
        for name, p, s in rows:
            f.write(f"{name},{p:.4f},{s:.6f}\n")
    click.echo(f"evaluated {len(rows)} images -> {out_csv}")


@cli.command("video")
@click.option("--sr", "sr_path", required=True, type=click.Path(exists=True))
@click.option("--frames", "frames_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--fps", type=float, default=8.0, show_default=True)
def video_cmd(sr_path, frames_dir, out_dir, fps):
    """Reconstruct a directory of numbered LR frames, preserving numbering."""
    model = nn.load_checkpoint(sr_path)
    names = sorted(x for x in os.listdir(frames_dir) if x.endswith(".png"))
    frames = [imageops.load_png(os.path.join(frames_dir, n)) for n in names]
    recon = superres.reconstruct_video(model, frames)
    os.makedirs(out_dir, exist_ok=True)
    for name, frame in zip(names, recon):
        imageops.save_png(frame, os.path.join(out_dir, name))
    with open(os.path.join(out_dir, "index.json"), "w") as f:
        json.dump({"fps": fps, "frames": names}, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_provenance(
        out_dir, "video",
        {"sr": os.path.abspath(sr_path), "frames": os.path.abspath(frames_dir), "fps": fps},
    )
    click.echo(f"reconstructed {len(recon)} frames")


@cli.command("ablate")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def ablate_cmd(spec_path, out_dir):
    """Sweep forged-set (and optionally authentic-set) sizes; CSV of PSNR/SSIM."""
    with open(spec_path) as f:
        spec = json.load(f)
    from .experiments import run_ablation

    rows = run_ablation(spec, out_dir)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "ablation.csv"), "w") as f:
        f.write("variable,count,psnr_db,ssim\n")
        for r in rows:
            f.write(f"{r['variable']},{r['count']},{r['psnr_db']:.4f},{r['ssim']:.6f}\n")
    _write_provenance(out_dir, "ablate", {"spec": os.path.abspath(spec_path)})
    click.echo(f"wrote {len(rows)} ablation rows")


@cli.command("serve")
@click.option("--generator", "gen_path", required=True, type=click.Path(exists=True))
@click.option("--sr", "sr_path", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--steps", "schedule_t", type=int, default=diffusion.DEFAULT_T, show_default=True)
def serve_cmd(gen_path, sr_path, host, port, schedule_t):
    """Serve /health, /forge and /superres over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(generator_path=gen_path, sr_path=sr_path or "", schedule_t=schedule_t)
    uvicorn.run(app, host=host, port=port)


@cli.command("replay")
@click.argument("provenance", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def replay_cmd(provenance, out_dir):
    """Re-run a stage from its provenance JSON into a fresh directory."""
    with open(provenance) as f:
        doc = json.load(f)
    command = doc["command"]
    args = doc["args"]
    argv = [command]
    for key, value in args.items():
        if value is None or key == "out_name":
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            argv.append(flag if value else f"--no-{key.replace('_', '-')}")
        else:
            argv.extend([flag, str(value)])
    if command == "infer":
        argv.extend(["--out", os.path.join(out_dir, args["out_name"])])
    else:
        argv.extend(["--out", out_dir])
    code = run(argv)
    if code != 0:
        raise RuntimeError(f"replayed stage exited with {code}")


def run(argv=None) -> int:
    """Dispatch with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.exceptions.Exit as exc:
        return 0 if exc.exit_code == 0 else 1
    except click.Abort:
        return 1
    except Exception as exc:  # noqa: BLE001 - single funnel to exit code 2
        click.echo(f"error: {exc}", err=True)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
