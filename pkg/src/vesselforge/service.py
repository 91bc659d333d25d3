"""HTTP surface for the forgery and super-resolution models.

Stateless between requests apart from the loaded checkpoints. Image
payloads travel as base64-encoded 8-bit grayscale PNG inside JSON.
"""

from __future__ import annotations

import base64
import io
import os

import numpy as np
from fastapi import FastAPI, HTTPException
from PIL import Image
from pydantic import BaseModel, Field

from . import diffusion, doodle, imageops, nn, superres

MAX_SIDE = 512
MODEL_DIR_ENV = "VESSELFORGE_MODEL_DIR"


class ForgeRequest(BaseModel):
    image_b64: str
    seed: int = 0
    density: float = Field(default=0.05, gt=0.0, le=1.0)
    streak_len: int = Field(default=4, ge=1)
    blur_sigma: float = Field(default=1.0, gt=0.0)


class ForgeResponse(BaseModel):
    image_b64: str
    provenance: dict


class SuperresRequest(BaseModel):
    image_b64: str


class SuperresResponse(BaseModel):
    image_b64: str
    provenance: dict


class HealthResponse(BaseModel):
    status: str
    models: dict


def _decode_image(b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(b64, validate=True)
        with Image.open(io.BytesIO(raw)) as im:
            arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    except Exception as exc:
        raise HTTPException(status_code=400, detail=f"undecodable image payload: {exc}")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise HTTPException(status_code=400, detail=f"bad image shape {arr.shape}")
    if max(arr.shape) > MAX_SIDE:
        raise HTTPException(
            status_code=413, detail=f"image {arr.shape} exceeds {MAX_SIDE}x{MAX_SIDE}"
        )
    return arr


def _encode_image(img: np.ndarray) -> str:
    buf = io.BytesIO()
    arr = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def create_app(
    generator_path: str | None = None,
    sr_path: str | None = None,
    schedule_t: int = diffusion.DEFAULT_T,
) -> FastAPI:
    model_dir = os.environ.get(MODEL_DIR_ENV, "models")
    generator_path = generator_path or os.path.join(model_dir, "generator.ckpt")
    sr_path = sr_path or os.path.join(model_dir, "sr.ckpt")

    generator = nn.load_checkpoint(generator_path)
    if generator.kind != "denoiser":
        raise ValueError(f"{generator_path} is not a generator checkpoint")
    sr_model = None
    if os.path.exists(sr_path):
        sr_model = nn.load_checkpoint(sr_path)
    sched = diffusion.make_schedule(T=schedule_t)

    app = FastAPI(title="vesselforge")

    @app.get("/health", response_model=HealthResponse)
    def health():
        models = {"generator": os.path.basename(generator_path)}
        if sr_model is not None:
            models["sr"] = os.path.basename(sr_path)
        return HealthResponse(status="ok", models=models)

    @app.post("/forge", response_model=ForgeResponse)
    def forge_endpoint(req: ForgeRequest):
        img = _decode_image(req.image_b64)
        n = generator.scale
        if img.shape[0] % n or img.shape[1] % n:
            raise HTTPException(
                status_code=400, detail=f"dims {img.shape} not divisible by N={n}"
            )
        cfg = doodle.DoodleConfig(
            n=n,
            noise=doodle.NoiseParams(density=req.density, streak_len=req.streak_len),
            blur_sigma=req.blur_sigma,
            seed=req.seed,
        )
        try:
            condition = doodle.prepare_doodle_condition(img, cfg)
            forged = doodle.forge(generator, condition, sched, req.seed)
        except FloatingPointError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        provenance = {
            "seed": req.seed,
            "density": req.density,
            "streak_len": req.streak_len,
            "blur_sigma": req.blur_sigma,
            "n": n,
            "schedule_t": sched.T,
            "generator": os.path.basename(generator_path),
        }
        return ForgeResponse(image_b64=_encode_image(forged), provenance=provenance)

    @app.post("/superres", response_model=SuperresResponse)
    def superres_endpoint(req: SuperresRequest):
        if sr_model is None:
            raise HTTPException(status_code=400, detail="no SR model loaded")
        img = _decode_image(req.image_b64)
        try:
            out = superres.infer_sr(sr_model, img)
        except FloatingPointError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        provenance = {"scale": sr_model.scale, "sr": os.path.basename(sr_path)}
        return SuperresResponse(image_b64=_encode_image(out), provenance=provenance)

    return app
