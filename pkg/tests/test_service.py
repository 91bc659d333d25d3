import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from vesselforge import diffusion, doodle, imageops, nn
from vesselforge.nn import DenoiserModel, SrModel
from vesselforge.service import create_app

T_STEPS = 10


def _png_b64(img: np.ndarray) -> str:
    buf = io.BytesIO()
    arr = np.round(np.clip(img, 0, 1) * 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def _b64_img(b64: str) -> np.ndarray:
    with Image.open(io.BytesIO(base64.b64decode(b64))) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


@pytest.fixture(scope="module")
def checkpoints(tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    gen = DenoiserModel(base_channels=4, scale=4, seed=1)
    rng = np.random.default_rng(2)
    for _, t in gen.params.items():
        t.data = rng.normal(scale=0.05, size=t.data.shape)
    nn.save_checkpoint(gen, d / "generator.ckpt")
    nn.save_checkpoint(SrModel(base_channels=4, scale=4, seed=1), d / "sr.ckpt")
    return d


@pytest.fixture(scope="module")
def client(checkpoints):
    app = create_app(
        generator_path=str(checkpoints / "generator.ckpt"),
        sr_path=str(checkpoints / "sr.ckpt"),
        schedule_t=T_STEPS,
    )
    return TestClient(app)


def _doodle(size=32):
    img = np.zeros((size, size))
    img[size // 2, 4 : size - 4] = 1.0
    return img


class TestHealth:
    def test_ok_before_any_request(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["models"]["generator"] == "generator.ckpt"
        assert body["models"]["sr"] == "sr.ckpt"


class TestForgeEndpoint:
    def test_deterministic_per_seed(self, client):
        payload = {"image_b64": _png_b64(_doodle()), "seed": 5}
        r1 = client.post("/forge", json=payload)
        r2 = client.post("/forge", json=payload)
        assert r1.status_code == 200
        assert r1.json()["image_b64"] == r2.json()["image_b64"]
        assert r1.json()["provenance"]["seed"] == 5

    def test_matches_library_path(self, checkpoints, client):
        # Same raster + seed through HTTP equals the direct pipeline call.
        seed = 9
        raster = _doodle()
        r = client.post("/forge", json={"image_b64": _png_b64(raster), "seed": seed})
        served = _b64_img(r.json()["image_b64"])
        gen = nn.load_checkpoint(checkpoints / "generator.ckpt")
        sched = diffusion.make_schedule(T=T_STEPS)
        cfg = doodle.DoodleConfig(n=4, seed=seed)
        cond = doodle.prepare_doodle_condition(imageops.load_png(io.BytesIO(base64.b64decode(_png_b64(raster)))), cfg)
        expected = doodle.forge(gen, cond, sched, seed)
        quantized = np.round(np.clip(expected, 0, 1) * 255) / 255
        np.testing.assert_array_equal(served, quantized)

    def test_indivisible_dims_400(self, client):
        r = client.post("/forge", json={"image_b64": _png_b64(np.zeros((33, 32))), "seed": 0})
        assert r.status_code == 400
        assert "divisible" in r.json()["detail"]

    def test_garbage_payload_400(self, client):
        r = client.post("/forge", json={"image_b64": "not base64!!", "seed": 0})
        assert r.status_code == 400

    def test_oversized_413(self, client):
        r = client.post("/forge", json={"image_b64": _png_b64(np.zeros((516, 516))), "seed": 0})
        assert r.status_code == 413

    def test_validation_422_on_bad_density(self, client):
        r = client.post("/forge", json={"image_b64": _png_b64(_doodle()), "density": 2.0})
        assert r.status_code == 422


class TestSuperresEndpoint:
    def test_matches_bicubic_for_zero_residual_model(self, client):
        lr = np.random.default_rng(3).random((8, 8))
        r = client.post("/superres", json={"image_b64": _png_b64(lr)})
        assert r.status_code == 200
        out = _b64_img(r.json()["image_b64"])
        quantized_lr = np.round(lr * 255) / 255
        expected = np.clip(imageops.resample(quantized_lr, 4.0), 0, 1)
        assert np.max(np.abs(out - expected)) <= 0.5 / 255 + 1e-9
        assert r.json()["provenance"]["scale"] == 4

    def test_no_sr_model_400(self, checkpoints):
        app = create_app(
            generator_path=str(checkpoints / "generator.ckpt"),
            sr_path=str(checkpoints / "nonexistent.ckpt"),
            schedule_t=T_STEPS,
        )
        c = TestClient(app)
        r = c.post("/superres", json={"image_b64": _png_b64(np.zeros((8, 8)))})
        assert r.status_code == 400


class TestConcurrency:
    def test_concurrent_forges_independent(self, client):
        import concurrent.futures

        raster = _png_b64(_doodle())

        def call(seed):
            return client.post("/forge", json={"image_b64": raster, "seed": seed}).json()["image_b64"]

        with concurrent.futures.ThreadPoolExecutor(4) as ex:
            results = list(ex.map(call, [1, 2, 1, 2]))
        assert results[0] == results[2]
        assert results[1] == results[3]
        assert results[0] != results[1]
