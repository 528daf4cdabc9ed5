"""Session-based interactive inference HTTP API.

Sessions cache the matte and uncertainty for the current (image, clicks)
state; edits recompute from scratch (inference is a pure function of image and
clicks, so replaying the click history reproduces the live matte bit-exactly).
Refinement overlays the cached matte and is invalidated by any click edit.
"""

from __future__ import annotations

import io as _io
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response, UploadFile
from PIL import Image as PILImage

from . import io as cmio
from .domain import AlphaMatte, ClickSet, HintMap, Image, Polarity, UncertaintyMap
from .interaction import render_hint_map
from .models import InteractiveMattingNet, RefinementNet, load_matting_model, load_refiner
from .refinement import patches_to_json, refine_matte, select_patches

DEFAULT_MAX_SIDE = 2048


@dataclass
class SessionState:
    image: Image
    clicks: ClickSet
    alpha: np.ndarray
    sigma: np.ndarray | None
    downscaled: bool
    refined_alpha: np.ndarray | None = None
    refinements: list[dict] = field(default_factory=list)
    history: list[tuple[ClickSet, np.ndarray, np.ndarray | None]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _encode_png_16(alpha: np.ndarray) -> bytes:
    buf = _io.BytesIO()
    PILImage.fromarray(np.round(alpha * 65535.0).astype(np.uint16)).save(buf, "PNG")
    return buf.getvalue()


def create_app(
    model: InteractiveMattingNet | None = None,
    refiner: RefinementNet | None = None,
    matting_ckpt: str | None = None,
    refiner_ckpt: str | None = None,
    max_side: int = DEFAULT_MAX_SIDE,
    click_radius: int = 15,
    patch_size: int = 64,
) -> FastAPI:
    if model is None:
        if matting_ckpt is None:
            raise ValueError("need a model or a checkpoint path")
        model = load_matting_model(matting_ckpt)
    if refiner is None and refiner_ckpt is not None:
        refiner = load_refiner(refiner_ckpt)

    app = FastAPI(title="clickmatte")
    sessions: dict[str, SessionState] = {}

    def infer(image: Image, clicks: ClickSet) -> tuple[np.ndarray, np.ndarray | None]:
        h, w = image.shape
        hints = render_hint_map(clicks, h, w)
        if model.has_uncertainty_head:
            from .models import uncertainty_forward

            out = uncertainty_forward(model, image, hints)
            return np.asarray(out.alpha_p.data), np.asarray(out.sigma_p.data)
        from .models import matting_forward

        return np.asarray(matting_forward(model, image, hints).data), None

    def get_session(session_id: str) -> SessionState:
        state = sessions.get(session_id)
        if state is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return state

    def state_json(session_id: str, state: SessionState) -> dict:
        return {
            "id": session_id,
            "height": state.image.height,
            "width": state.image.width,
            "downscaled": state.downscaled,
            "clicks": cmio.clicks_to_json(state.clicks),
            "refinements": state.refinements,
            "refiner_available": refiner is not None,
            "uncertainty_available": state.sigma is not None,
        }

    @app.post("/session")
    async def create_session(image: UploadFile):
        raw = await image.read()
        try:
            img = cmio.decode_image(raw)
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"undecodable image: {exc}")
        downscaled = False
        if max(img.height, img.width) > max_side:
            scale = max_side / max(img.height, img.width)
            pil = PILImage.fromarray(np.round(img.data * 255).astype(np.uint8))
            pil = pil.resize((int(img.width * scale), int(img.height * scale)), PILImage.BILINEAR)
            img = Image(np.asarray(pil, dtype=np.float32) / 255.0)
            downscaled = True
        clicks = ClickSet((), click_radius)
        alpha, sigma = infer(img, clicks)
        session_id = uuid.uuid4().hex
        sessions[session_id] = SessionState(img, clicks, alpha, sigma, downscaled)
        return state_json(session_id, sessions[session_id])

    @app.post("/session/{session_id}/click")
    async def add_click(session_id: str, body: dict):
        state = get_session(session_id)
        with state.lock:
            row, col = int(body["row"]), int(body["col"])
            polarity = Polarity(body["polarity"])
            if not (0 <= row < state.image.height and 0 <= col < state.image.width):
                raise HTTPException(status_code=400, detail="click out of bounds")
            state.history.append((state.clicks, state.alpha, state.sigma))
            state.clicks = state.clicks.appended(row, col, polarity)
            state.alpha, state.sigma = infer(state.image, state.clicks)
            state.refined_alpha = None
            return state_json(session_id, state)

    @app.post("/session/{session_id}/undo")
    async def undo_click(session_id: str):
        state = get_session(session_id)
        with state.lock:
            if len(state.clicks) == 0:
                raise HTTPException(status_code=400, detail="no clicks to undo")
            state.clicks, state.alpha, state.sigma = state.history.pop()
            state.refined_alpha = None
            return state_json(session_id, state)

    @app.post("/session/{session_id}/refine")
    async def refine(session_id: str, body: dict):
        state = get_session(session_id)
        with state.lock:
            k = int(body.get("K", 0))
            if k < 0:
                raise HTTPException(status_code=400, detail="K must be >= 0")
            if refiner is None:
                raise HTTPException(status_code=400, detail="refiner checkpoint not loaded")
            if state.sigma is None:
                raise HTTPException(status_code=400, detail="no uncertainty available")
            base = state.refined_alpha if state.refined_alpha is not None else state.alpha
            patches = select_patches(UncertaintyMap(state.sigma), patch_size, k) if k else []
            refined = refine_matte(state.image, AlphaMatte(base), patches, refiner)
            state.refined_alpha = np.asarray(refined.data)
            record = {"K": k, "patches": patches_to_json(patches)}
            state.refinements.append(record)
            return {"id": session_id, **record}

    @app.get("/session/{session_id}/alpha.png")
    async def get_alpha(session_id: str):
        state = get_session(session_id)
        with state.lock:
            alpha = state.refined_alpha if state.refined_alpha is not None else state.alpha
            return Response(content=_encode_png_16(alpha), media_type="image/png")

    @app.get("/session/{session_id}/uncertainty.png")
    async def get_uncertainty(session_id: str):
        state = get_session(session_id)
        with state.lock:
            if state.sigma is None:
                raise HTTPException(status_code=400, detail="no uncertainty available")
            lo, hi = float(state.sigma.min()), float(state.sigma.max())
            span = hi - lo if hi > lo else 1.0
            norm = np.round((state.sigma - lo) / span * 255.0).astype(np.uint8)
            buf = _io.BytesIO()
            PILImage.fromarray(norm, mode="L").save(buf, "PNG")
            return Response(
                content=buf.getvalue(),
                media_type="image/png",
                headers={"X-Sigma-Min": repr(lo), "X-Sigma-Max": repr(hi)},
            )

    @app.get("/session/{session_id}/state")
    async def get_state(session_id: str):
        state = get_session(session_id)
        with state.lock:
            return state_json(session_id, state)

    @app.get("/session/{session_id}/image.png")
    async def get_image(session_id: str):
        state = get_session(session_id)
        buf = _io.BytesIO()
        PILImage.fromarray(np.round(state.image.data * 255).astype(np.uint8)).save(buf, "PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    return app
