"""File formats: PNG images/mattes, a binary float-map container, click JSON.

Mattes go to 16-bit grayscale PNG. HintMap/UncertaintyMap use a compact
binary container: 8-byte magic, uint32 height/width (little endian), then a
row-major float32 payload. Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .domain import AlphaMatte, ClickPoint, ClickSet, HintMap, Image, Polarity, UncertaintyMap

FLOATMAP_MAGIC = b"CMFMAP01"


def save_image_png(image: Image, path: str | Path) -> None:
    arr = np.round(image.data * 255.0).astype(np.uint8)
    PILImage.fromarray(arr, mode="RGB").save(path)


def load_image_png(path: str | Path) -> Image:
    return decode_image(Path(path).read_bytes())


def decode_image(data: bytes) -> Image:
    import io as _io

    pil = PILImage.open(_io.BytesIO(data))
    arr = np.asarray(pil.convert("RGB"), dtype=np.float32) / 255.0
    return Image(arr)


def save_matte_png(matte: AlphaMatte, path: str | Path) -> None:
    arr = np.round(matte.data * 65535.0).astype(np.uint16)
    PILImage.fromarray(arr).save(path)


def load_matte_png(path: str | Path) -> AlphaMatte:
    pil = PILImage.open(path)
    arr = np.asarray(pil, dtype=np.float32)
    if pil.mode in ("I;16", "I"):
        arr = arr / 65535.0
    elif pil.mode == "L":
        arr = arr / 255.0
    else:
        arr = np.asarray(pil.convert("L"), dtype=np.float32) / 255.0
    return AlphaMatte(arr)


def floatmap_bytes(data: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(data, dtype="<f4")
    h, w = arr.shape
    return FLOATMAP_MAGIC + struct.pack("<II", h, w) + arr.tobytes()


def parse_floatmap(blob: bytes) -> np.ndarray:
    if blob[:8] != FLOATMAP_MAGIC:
        raise ValueError("bad magic header")
    h, w = struct.unpack("<II", blob[8:16])
    payload = np.frombuffer(blob[16:], dtype="<f4")
    if payload.size != h * w:
        raise ValueError("payload size does not match dimensions")
    return payload.reshape(h, w).copy()


def save_hint_map(hint: HintMap, path: str | Path) -> None:
    Path(path).write_bytes(floatmap_bytes(hint.data))


def load_hint_map(path: str | Path) -> HintMap:
    return HintMap(parse_floatmap(Path(path).read_bytes()))


def save_uncertainty_map(sigma: UncertaintyMap, path: str | Path) -> None:
    Path(path).write_bytes(floatmap_bytes(sigma.data))


def load_uncertainty_map(path: str | Path) -> UncertaintyMap:
    return UncertaintyMap(parse_floatmap(Path(path).read_bytes()))


def clicks_to_json(clicks: ClickSet) -> list[dict]:
    return [
        {"row": p.row, "col": p.col, "polarity": p.polarity.value, "i": p.sequence_index}
        for p in clicks.points
    ]


def clicks_from_json(records: list[dict], radius: int = 15) -> ClickSet:
    points = tuple(
        ClickPoint(int(r["row"]), int(r["col"]), Polarity(r["polarity"]), int(r["i"]))
        for r in records
    )
    return ClickSet(points, radius)


def save_clicks(clicks: ClickSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(clicks_to_json(clicks)))


def load_clicks(path: str | Path, radius: int = 15) -> ClickSet:
    return clicks_from_json(json.loads(Path(path).read_text()), radius)
