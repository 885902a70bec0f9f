"""HTTP API contracts against a freshly trained tiny checkpoint."""

import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from latentswap.data import denormalize, load_image, normalize
from latentswap.evaluate import reconstruct
from latentswap.service import create_app, fit_to_model, load
from latentswap.train import train_loop


@pytest.fixture(scope="module")
def ckpt_dir(tmp_path_factory):
    from latentswap.config import ModelConfig, TrainConfig
    from latentswap.synth import SyntheticSpec, generate_synthetic

    root = tmp_path_factory.mktemp("service")
    spec = SyntheticSpec(image_size=32, attribute_names=("bangs", "smile"), seed=51)
    dataset, _ = generate_synthetic(spec, 40, out_dir=root / "data")
    cfg = ModelConfig(n_attributes=2, image_size=32, depth=3, base_channels=4,
                      latent_channels=16)
    tcfg = TrainConfig(batch_size=4, total_steps=4, seed=9, checkpoint_interval=10)
    train_loop(dataset, tcfg, cfg, out_dir=root / "run")
    return root


@pytest.fixture(scope="module")
def session(ckpt_dir):
    return load(ckpt_dir / "run" / "ckpt-final")


@pytest.fixture(scope="module")
def client(session):
    return TestClient(create_app(session))


def png_b64(path):
    return base64.b64encode(open(path, "rb").read()).decode()


def decode_png(b64):
    return np.asarray(Image.open(io.BytesIO(base64.b64decode(b64))).convert("RGB"))


@pytest.fixture(scope="module")
def two_images(ckpt_dir):
    data = ckpt_dir / "data"
    return data / "synth_000000.png", data / "synth_000001.png"


class TestBasics:
    def test_health_carries_fingerprint(self, client, session):
        body = client.get("/health").json()
        assert body == {"status": "ok", "fingerprint": session.fingerprint}

    def test_attributes_ordered(self, client):
        assert client.get("/attributes").json() == {"attributes": ["bangs", "smile"]}

    def test_not_loaded_is_503(self):
        bare = TestClient(create_app(None))
        assert bare.get("/health").status_code == 503
        assert bare.get("/attributes").status_code == 503


class TestTransfer:
    def body(self, two_images, **over):
        a, b = two_images
        payload = {"image_a": png_b64(a), "image_b": png_b64(b), "attributes": [0]}
        payload.update(over)
        return payload

    def test_response_fields(self, client, two_images):
        r = client.post("/transfer", json=self.body(two_images))
        assert r.status_code == 200
        assert set(r.json()) == {"image_c", "image_d", "residual_c", "residual_d"}

    def test_alpha_zero_returns_reconstruction(self, client, session, two_images):
        r = client.post("/transfer", json=self.body(two_images, alphas=[0.0]))
        got = decode_png(r.json()["image_c"])
        img = normalize(load_image(two_images[0]))
        assert np.array_equal(got, denormalize(reconstruct(img, session.model)))

    def test_self_exchange_fixed_point(self, client, session, two_images):
        a, _ = two_images
        payload = {"image_a": png_b64(a), "image_b": png_b64(a), "attributes": [0],
                   "alphas": [1.0]}
        r = client.post("/transfer", json=payload)
        img = normalize(load_image(a))
        expected = denormalize(reconstruct(img, session.model))
        assert np.array_equal(decode_png(r.json()["image_c"]), expected)

    def test_deterministic_byte_identical(self, client, two_images):
        body = self.body(two_images, attributes=[0, 1], alphas=[1.0, 0.5])
        assert client.post("/transfer", json=body).json() == \
               client.post("/transfer", json=body).json()

    def test_unknown_attribute_404(self, client, two_images):
        assert client.post("/transfer", json=self.body(two_images, attributes=[5])).status_code == 404

    def test_alpha_out_of_range_422(self, client, two_images):
        assert client.post("/transfer",
                           json=self.body(two_images, alphas=[1.5])).status_code == 422

    def test_alpha_arity_mismatch_422(self, client, two_images):
        assert client.post("/transfer",
                           json=self.body(two_images, alphas=[0.5, 0.5])).status_code == 422

    def test_undecodable_image_400(self, client, two_images):
        r = client.post("/transfer", json=self.body(two_images, image_a="not-base64!"))
        assert r.status_code == 400
        assert "image_a" in r.json()["detail"]

    def test_not_loaded_503(self, two_images):
        bare = TestClient(create_app(None))
        assert bare.post("/transfer", json=self.body(two_images)).status_code == 503

    def test_oversize_request_rejected(self, client, two_images):
        huge = self.body(two_images, image_a="A" * (17 * 1024 * 1024))
        assert client.post("/transfer", json=huge).status_code == 413


class TestInterpolate:
    def test_grid_png(self, client, two_images):
        a, b = two_images
        r = client.post("/interpolate", json={"image": png_b64(a), "refs": [png_b64(b)],
                                              "attribute": 0, "steps": 3})
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        grid = np.asarray(Image.open(io.BytesIO(r.content)))
        assert grid.shape == (32, 3 * 32 + 2 * 2, 3)

    def test_unknown_attribute(self, client, two_images):
        a, b = two_images
        r = client.post("/interpolate", json={"image": png_b64(a), "refs": [png_b64(b)],
                                              "attribute": 9, "steps": 3})
        assert r.status_code == 404

    def test_two_attribute_grid(self, client, two_images):
        a, b = two_images
        r = client.post("/interpolate2", json={
            "image": png_b64(a), "ref1": png_b64(b), "attr1": 0,
            "ref2": png_b64(b), "attr2": 1, "rows": 2, "cols": 2})
        assert r.status_code == 200
        grid = np.asarray(Image.open(io.BytesIO(r.content)))
        assert grid.shape == (2 * 32 + 2, 2 * 32 + 2, 3)

    def test_same_attribute_422(self, client, two_images):
        a, b = two_images
        r = client.post("/interpolate2", json={
            "image": png_b64(a), "ref1": png_b64(b), "attr1": 1,
            "ref2": png_b64(b), "attr2": 1, "rows": 2, "cols": 2})
        assert r.status_code == 422


class TestFitToModel:
    def test_center_crop_and_resize(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (50, 70, 3), dtype=np.uint8)
        out = fit_to_model(img, 32)
        assert out.shape == (32, 32, 3)

    def test_exact_size_untouched(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        assert np.array_equal(fit_to_model(img, 32), img)
