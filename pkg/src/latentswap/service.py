"""HTTP inference service over a loaded checkpoint.

JSON over HTTP with base64 PNG payloads. The session is immutable after
load; identical requests against the same fingerprint return byte-identical
responses. Uploads are center-cropped to a square and resized to the model
input size; landmark alignment is a preprocessing concern, not a serving
one.
"""

import base64
import io
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from PIL import Image
from pydantic import BaseModel

from . import checkpoint as ckpt
from .data import denormalize, normalize
from .errors import CheckpointError, ContractError
from .evaluate import emit_grid, interpolate_matrix, interpolate_single, transfer_multi

MAX_REQUEST_BYTES = 16 * 1024 * 1024


@dataclass(frozen=True)
class SessionModel:
    """Read-only model handle: parameters, names, checkpoint content hash."""

    model: object
    attribute_names: tuple
    fingerprint: str

    @property
    def image_size(self):
        return self.model.config.image_size


def load(checkpoint_dir):
    """Load all four networks and fingerprint the checkpoint bytes."""
    model, manifest, _, _ = ckpt.load_checkpoint(checkpoint_dir)
    names = tuple(manifest["attribute_names"])
    if len(names) != model.config.n_attributes:
        raise CheckpointError(
            f"{checkpoint_dir}: {len(names)} attribute names for "
            f"n_attributes={model.config.n_attributes}"
        )
    return SessionModel(model=model, attribute_names=names, fingerprint=ckpt.fingerprint(checkpoint_dir))


def fit_to_model(image_u8, size):
    """Center square crop + bilinear resize to the model input size."""
    h, w = image_u8.shape[:2]
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    square = image_u8[top : top + side, left : left + side]
    if side != size:
        square = np.asarray(
            Image.fromarray(square).resize((size, size), Image.BILINEAR)
        )
    return square


def _decode_png_field(b64, field):
    try:
        raw = base64.b64decode(b64, validate=True)
        img = Image.open(io.BytesIO(raw))
        img.load()
    except Exception:
        raise ValueError(field)
    return np.asarray(img.convert("RGB"))


def _encode_png(image_u8):
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image_u8, dtype=np.uint8)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def residual_view(residual):
    """Map a [-2, 2] residual to displayable bytes as (R + 2) / 4."""
    return np.floor((np.clip(residual, -2.0, 2.0) + 2.0) / 4.0 * 255.0 + 0.5).astype(np.uint8)


class TransferRequest(BaseModel):
    image_a: str
    image_b: str
    attributes: list[int]
    alphas: list[float] | None = None


class InterpolateRequest(BaseModel):
    image: str
    refs: list[str]
    attribute: int
    steps: int = 4


class Interpolate2Request(BaseModel):
    image: str
    ref1: str
    attr1: int
    ref2: str
    attr2: int
    rows: int = 4
    cols: int = 4


def create_app(session=None):
    app = FastAPI(title="latentswap inference service")
    app.state.session = session

    # the browser editor is served from a different origin than the API
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.middleware("http")
    async def limit_size(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and int(length) > MAX_REQUEST_BYTES:
            return JSONResponse({"detail": "request exceeds 16 MiB"}, status_code=413)
        return await call_next(request)

    def current_session():
        return app.state.session

    def error(status, detail):
        return JSONResponse({"detail": detail}, status_code=status)

    @app.get("/health")
    def health():
        session = current_session()
        if session is None:
            return error(503, "model not loaded")
        return {"status": "ok", "fingerprint": session.fingerprint}

    @app.get("/attributes")
    def attributes():
        session = current_session()
        if session is None:
            return error(503, "model not loaded")
        return {"attributes": list(session.attribute_names)}

    def prep(session, b64, field):
        img = _decode_png_field(b64, field)
        return normalize(fit_to_model(img, session.image_size))

    @app.post("/transfer")
    def transfer_endpoint(req: TransferRequest):
        session = current_session()
        if session is None:
            return error(503, "model not loaded")
        n = len(session.attribute_names)
        for i in req.attributes:
            if not 0 <= i < n:
                return error(404, f"unknown attribute index {i}; model has {n} attributes")
        alphas = req.alphas if req.alphas is not None else [1.0] * len(req.attributes)
        if len(alphas) != len(req.attributes):
            return error(422, f"{len(alphas)} alphas for {len(req.attributes)} attributes")
        for a in alphas:
            if not 0.0 <= a <= 1.0:
                return error(422, f"alpha {a} outside [0, 1]")
        try:
            img_a = prep(session, req.image_a, "image_a")
            img_b = prep(session, req.image_b, "image_b")
        except ValueError as exc:
            return error(400, f"undecodable image in field {exc.args[0]}")
        c, d, res_c, res_d = transfer_multi(
            img_a, img_b, list(zip(req.attributes, alphas)), session.model
        )
        return {
            "image_c": _encode_png(denormalize(c)),
            "image_d": _encode_png(denormalize(d)),
            "residual_c": _encode_png(residual_view(res_c)),
            "residual_d": _encode_png(residual_view(res_d)),
        }

    @app.post("/interpolate")
    def interpolate_endpoint(req: InterpolateRequest):
        session = current_session()
        if session is None:
            return error(503, "model not loaded")
        if not 0 <= req.attribute < len(session.attribute_names):
            return error(404, f"unknown attribute index {req.attribute}")
        try:
            img = prep(session, req.image, "image")
            refs = [prep(session, r, f"refs[{k}]") for k, r in enumerate(req.refs)]
        except ValueError as exc:
            return error(400, f"undecodable image in field {exc.args[0]}")
        try:
            images, rows, cols = interpolate_single(img, refs, req.attribute, req.steps, session.model)
        except ContractError as exc:
            return error(422, str(exc))
        png = emit_grid(images, rows, cols)
        buf = io.BytesIO()
        Image.fromarray(png).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/interpolate2")
    def interpolate2_endpoint(req: Interpolate2Request):
        session = current_session()
        if session is None:
            return error(503, "model not loaded")
        n = len(session.attribute_names)
        for i in (req.attr1, req.attr2):
            if not 0 <= i < n:
                return error(404, f"unknown attribute index {i}")
        try:
            img = prep(session, req.image, "image")
            r1 = prep(session, req.ref1, "ref1")
            r2 = prep(session, req.ref2, "ref2")
        except ValueError as exc:
            return error(400, f"undecodable image in field {exc.args[0]}")
        try:
            images = interpolate_matrix(
                img, r1, req.attr1, r2, req.attr2, req.rows, req.cols, session.model
            )
        except ContractError as exc:
            return error(422, str(exc))
        png = emit_grid(images, req.rows, req.cols)
        buf = io.BytesIO()
        Image.fromarray(png).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    return app


def serve(checkpoint_dir, host="127.0.0.1", port=8000):
    import uvicorn

    app = create_app(load(checkpoint_dir))
    uvicorn.run(app, host=host, port=port)
