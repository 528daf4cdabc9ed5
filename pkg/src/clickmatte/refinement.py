"""Uncertainty-guided patch selection and local refinement of the matte."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import AlphaMatte, Image, UncertaintyMap
from .models import RefinementNet, refinement_forward

_FULL_SEARCH_PIXEL_LIMIT = 512 * 512


@dataclass(frozen=True)
class PatchSpec:
    top: int
    left: int
    size: int
    score: float

    def to_json(self) -> dict:
        return {"top": self.top, "left": self.left, "k": self.size, "score": self.score}

    @classmethod
    def from_json(cls, rec: dict) -> "PatchSpec":
        return cls(int(rec["top"]), int(rec["left"]), int(rec["k"]), float(rec["score"]))

    def overlaps(self, other: "PatchSpec") -> bool:
        return not (
            self.top + self.size <= other.top
            or other.top + other.size <= self.top
            or self.left + self.size <= other.left
            or other.left + other.size <= self.left
        )


def _window_sums(field: np.ndarray, k: int) -> np.ndarray:
    """Sum of every k x k window via an integral image; shape (H-k+1, W-k+1)."""
    ii = np.zeros((field.shape[0] + 1, field.shape[1] + 1), dtype=np.float64)
    ii[1:, 1:] = np.cumsum(np.cumsum(field, axis=0), axis=1)
    return ii[k:, k:] - ii[:-k, k:] - ii[k:, :-k] + ii[:-k, :-k]


def _candidate_positions(field: np.ndarray, k: int) -> list[tuple[int, int]]:
    h, w = field.shape
    max_t, max_l = h - k, w - k
    if h * w <= _FULL_SEARCH_PIXEL_LIMIT:
        return [(t, l) for t in range(max_t + 1) for l in range(max_l + 1)]
    stride = max(1, k // 2)
    tops = sorted(set(list(range(0, max_t + 1, stride)) + [max_t]))
    lefts = sorted(set(list(range(0, max_l + 1, stride)) + [max_l]))
    cands = [(t, l) for t in tops for l in lefts]
    r, c = np.unravel_index(int(np.argmax(field)), field.shape)
    cands.append((min(max(0, r - k // 2), max_t), min(max(0, c - k // 2), max_l)))
    return sorted(set(cands))


def _greedy_select(field: np.ndarray, k: int, count: int) -> list[PatchSpec]:
    if count <= 0:
        return []
    h, w = field.shape
    if k > min(h, w):
        raise ValueError(f"patch size {k} exceeds image {h}x{w}")
    sums = _window_sums(field, k)
    cands = _candidate_positions(field, k)
    scored = [PatchSpec(t, l, k, float(sums[t, l])) for t, l in cands]
    scored.sort(key=lambda p: (-p.score, p.top, p.left))
    chosen: list[PatchSpec] = []
    for patch in scored:
        if len(chosen) >= count:
            break
        if all(not patch.overlaps(c) for c in chosen):
            chosen.append(patch)
    return chosen


def select_patches(sigma: UncertaintyMap, k: int = 64, count: int = 8) -> list[PatchSpec]:
    """Greedy top-`count` non-overlapping k x k windows by summed uncertainty.

    Ties broken by (top, left) raster order; may return fewer than `count`
    when no non-overlapping candidates remain.
    """
    return _greedy_select(np.asarray(sigma.data, dtype=np.float64), k, count)


def mine_training_patches(alpha_p: AlphaMatte, alpha_g: AlphaMatte, k: int = 64,
                          count: int = 8) -> list[PatchSpec]:
    """Same greedy selection, scored by summed absolute prediction error."""
    if alpha_p.shape != alpha_g.shape:
        raise ValueError("shape mismatch")
    err = np.abs(alpha_p.data.astype(np.float64) - alpha_g.data.astype(np.float64))
    return _greedy_select(err, k, count)


def refine_matte(image: Image, alpha_p: AlphaMatte, patches: list[PatchSpec],
                 model: RefinementNet) -> AlphaMatte:
    """Replace each patch window with the refiner output; untouched pixels are
    bit-identical to the input matte."""
    h, w = alpha_p.shape
    for i, p in enumerate(patches):
        if p.top < 0 or p.left < 0 or p.top + p.size > h or p.left + p.size > w:
            raise ValueError(f"patch {i} out of bounds")
        for q in patches[i + 1 :]:
            if p.overlaps(q):
                raise ValueError("overlapping patches")
    out = alpha_p.data.copy()
    for p in patches:
        sl = np.s_[p.top : p.top + p.size, p.left : p.left + p.size]
        img_patch = Image(image.data[sl])
        alpha_patch = AlphaMatte(alpha_p.data[sl])
        out[sl] = refinement_forward(model, img_patch, alpha_patch).data
    return AlphaMatte(out)


def patches_to_json(patches: list[PatchSpec]) -> list[dict]:
    return [p.to_json() for p in patches]


def patches_from_json(records: list[dict]) -> list[PatchSpec]:
    return [PatchSpec.from_json(r) for r in records]
