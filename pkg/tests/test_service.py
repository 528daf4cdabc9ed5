import io

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient
from PIL import Image as PILImage

from clickmatte.models import (InteractiveMattingNet, MattingModelConfig, RefinementNet,
                               RefinerConfig)
from clickmatte.service import create_app


def _png_bytes(h=64, w=48, seed=0):
    rng = np.random.default_rng(seed)
    arr = (rng.random((h, w, 3)) * 255).astype(np.uint8)
    buf = io.BytesIO()
    PILImage.fromarray(arr).save(buf, "PNG")
    return buf.getvalue()


@pytest.fixture(scope="module")
def client():
    torch.manual_seed(0)
    model = InteractiveMattingNet(MattingModelConfig(base_width=4),
                                  with_uncertainty=True).eval()
    refiner = RefinementNet(RefinerConfig(width=8)).eval()
    app = create_app(model=model, refiner=refiner, max_side=128)
    return TestClient(app)


def _new_session(client, **kw):
    resp = client.post("/session", files={"image": ("t.png", _png_bytes(**kw), "image/png")})
    assert resp.status_code == 200
    return resp.json()


def test_create_session_reports_dimensions(client):
    state = _new_session(client)
    assert state["height"] == 64 and state["width"] == 48
    assert state["clicks"] == []
    assert state["refiner_available"] and state["uncertainty_available"]
    assert not state["downscaled"]


def test_oversized_image_is_downscaled(client):
    state = _new_session(client, h=256, w=128, seed=1)
    assert state["downscaled"]
    assert max(state["height"], state["width"]) <= 128


def test_undecodable_image_is_rejected(client):
    resp = client.post("/session", files={"image": ("t.png", b"not a png", "image/png")})
    assert resp.status_code == 400


def test_unknown_session_404(client):
    assert client.get("/session/nope/state").status_code == 404
    assert client.post("/session/nope/click", json={"row": 0, "col": 0,
                                                    "polarity": "fg"}).status_code == 404


def test_click_updates_state_and_alpha(client):
    state = _new_session(client, seed=2)
    sid = state["id"]
    a0 = client.get(f"/session/{sid}/alpha.png").content
    resp = client.post(f"/session/{sid}/click",
                       json={"row": 10, "col": 10, "polarity": "fg"})
    assert resp.status_code == 200
    assert resp.json()["clicks"] == [{"row": 10, "col": 10, "polarity": "fg", "i": 0}]
    a1 = client.get(f"/session/{sid}/alpha.png").content
    assert a1 != a0


def test_click_out_of_bounds_400(client):
    sid = _new_session(client, seed=3)["id"]
    resp = client.post(f"/session/{sid}/click",
                       json={"row": 64, "col": 0, "polarity": "bg"})
    assert resp.status_code == 400


def test_undo_restores_previous_matte_bit_exactly(client):
    sid = _new_session(client, seed=4)["id"]
    a0 = client.get(f"/session/{sid}/alpha.png").content
    client.post(f"/session/{sid}/click", json={"row": 5, "col": 5, "polarity": "fg"})
    client.post(f"/session/{sid}/click", json={"row": 30, "col": 20, "polarity": "bg"})
    client.post(f"/session/{sid}/undo")
    client.post(f"/session/{sid}/undo")
    assert client.get(f"/session/{sid}/alpha.png").content == a0
    assert client.post(f"/session/{sid}/undo").status_code == 400


def test_alpha_png_is_16_bit_and_matches_shape(client):
    sid = _new_session(client, seed=5)["id"]
    raw = client.get(f"/session/{sid}/alpha.png").content
    img = PILImage.open(io.BytesIO(raw))
    assert img.mode.startswith("I")
    assert img.size == (48, 64)


def test_uncertainty_png_headers_recover_sigma_range(client):
    sid = _new_session(client, seed=6)["id"]
    resp = client.get(f"/session/{sid}/uncertainty.png")
    assert resp.status_code == 200
    lo, hi = float(resp.headers["X-Sigma-Min"]), float(resp.headers["X-Sigma-Max"])
    assert 0 < lo <= hi
    img = np.asarray(PILImage.open(io.BytesIO(resp.content)))
    assert img.shape == (64, 48)
    assert img.min() == 0 and img.max() == 255


def test_refine_returns_disjoint_patches_and_is_invalidated_by_click(client):
    sid = _new_session(client, h=128, w=128, seed=7)["id"]
    resp = client.post(f"/session/{sid}/refine", json={"K": 8})
    assert resp.status_code == 200
    patches = resp.json()["patches"]
    assert 0 < len(patches) <= 8
    for i, a in enumerate(patches):
        for b in patches[i + 1:]:
            no_overlap = (a["top"] + a["k"] <= b["top"] or b["top"] + b["k"] <= a["top"]
                          or a["left"] + a["k"] <= b["left"] or b["left"] + b["k"] <= a["left"])
            assert no_overlap
    state = client.get(f"/session/{sid}/state").json()
    assert state["refinements"][0]["K"] == 8
    client.post(f"/session/{sid}/click", json={"row": 1, "col": 1, "polarity": "fg"})
    # refinement overlay is invalidated by the click; a fresh alpha is served
    a = client.get(f"/session/{sid}/alpha.png")
    assert a.status_code == 200


def test_refine_without_refiner_400():
    torch.manual_seed(1)
    model = InteractiveMattingNet(MattingModelConfig(base_width=4),
                                  with_uncertainty=True).eval()
    bare = TestClient(create_app(model=model))
    sid = _new_session(bare, seed=8)["id"]
    assert bare.post(f"/session/{sid}/refine", json={"K": 4}).status_code == 400


def test_image_round_trip(client):
    png = _png_bytes(seed=9)
    resp = client.post("/session", files={"image": ("t.png", png, "image/png")})
    sid = resp.json()["id"]
    served = np.asarray(PILImage.open(io.BytesIO(client.get(f"/session/{sid}/image.png").content)))
    original = np.asarray(PILImage.open(io.BytesIO(png)))
    assert np.array_equal(served, original)
