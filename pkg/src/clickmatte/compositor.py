"""Synthetic training data: compositing, partitions, augmentation, generators.

The desk-scale dataset stands in for the large production matting corpora:
soft-edged procedural blobs with hair-like strokes composited over procedural
backgrounds. Two-object foregrounds create click-resolvable ambiguity (the
composite shows both objects, the ground truth keeps one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
from scipy import ndimage

from .domain import AlphaMatte, Image, RegionLabel, RegionPartition


@dataclass(frozen=True)
class MattingSample:
    image: Image
    alpha_gt: AlphaMatte
    partition: RegionPartition
    fg: Image
    bg: Image


def composite(fg: Image, bg: Image, alpha: AlphaMatte) -> Image:
    """Per-pixel I = alpha * F + (1 - alpha) * B, clamped to [0, 1]."""
    if fg.shape != bg.shape or fg.shape != alpha.shape:
        raise ValueError(f"shape mismatch: fg {fg.shape}, bg {bg.shape}, alpha {alpha.shape}")
    a = alpha.data[..., None]
    return Image(np.clip(a * fg.data + (1.0 - a) * bg.data, 0.0, 1.0))


def _disk(radius: int) -> np.ndarray:
    rr = np.arange(-radius, radius + 1)
    return (rr[:, None] ** 2 + rr[None, :] ** 2) <= radius * radius


def make_partition(alpha_gt: AlphaMatte, dilate_r: int = 3, erode_r: int = 3) -> RegionPartition:
    """Trimap-style partition: dilated fractional band, eroded solid foreground."""
    if dilate_r < 1 or erode_r < 1:
        raise ValueError("radii must be >= 1")
    a = alpha_gt.data
    band = (a > 0.0) & (a < 1.0)
    transition = ndimage.binary_dilation(band, structure=_disk(dilate_r)) if band.any() else band
    solid = a >= 1.0
    fg = ndimage.binary_erosion(solid, structure=_disk(erode_r), border_value=1) & ~transition
    labels = np.full(a.shape, int(RegionLabel.BACKGROUND), dtype=np.uint8)
    labels[transition] = int(RegionLabel.TRANSITION)
    labels[fg] = int(RegionLabel.FOREGROUND)
    return RegionPartition(labels)


@dataclass(frozen=True)
class AugmentConfig:
    max_rotation_deg: float = 15.0
    scale_range: tuple[float, float] = (0.8, 1.25)
    flip_probability: float = 0.5
    crop_size: int | None = None


@dataclass(frozen=True)
class AugmentParams:
    angle_deg: float
    scale: float
    flip: bool
    crop_top: int
    crop_left: int
    crop_size: int | None

    @classmethod
    def identity(cls) -> "AugmentParams":
        return cls(0.0, 1.0, False, 0, 0, None)


def sample_augment_params(
    height: int, width: int, config: AugmentConfig, rng: np.random.Generator
) -> AugmentParams:
    crop = config.crop_size
    if crop is not None and crop > min(height, width):
        raise ValueError(f"crop {crop} larger than image {height}x{width}")
    top = int(rng.integers(height - crop + 1)) if crop else 0
    left = int(rng.integers(width - crop + 1)) if crop else 0
    return AugmentParams(
        angle_deg=float(rng.uniform(-config.max_rotation_deg, config.max_rotation_deg)),
        scale=float(rng.uniform(*config.scale_range)),
        flip=bool(rng.random() < config.flip_probability),
        crop_top=top,
        crop_left=left,
        crop_size=crop,
    )


def _warp(arr: np.ndarray, params: AugmentParams, nearest: bool = False) -> np.ndarray:
    out = arr
    if params.flip:
        out = out[:, ::-1]
    if params.angle_deg != 0.0 or params.scale != 1.0:
        h, w = out.shape[:2]
        m = cv2.getRotationMatrix2D((w / 2.0 - 0.5, h / 2.0 - 0.5), params.angle_deg, params.scale)
        interp = cv2.INTER_NEAREST if nearest else cv2.INTER_LINEAR
        out = cv2.warpAffine(np.ascontiguousarray(out), m, (w, h), flags=interp,
                             borderMode=cv2.BORDER_REFLECT)
    if params.crop_size:
        t, l, k = params.crop_top, params.crop_left, params.crop_size
        out = out[t : t + k, l : l + k]
    return np.ascontiguousarray(out)


def apply_augment(sample: MattingSample, params: AugmentParams) -> MattingSample:
    """Apply one geometric transform to every field of the sample.

    The composite is rebuilt from the warped fg/bg/alpha so the compositing
    identity keeps holding exactly after interpolation.
    """
    alpha = AlphaMatte(np.clip(_warp(sample.alpha_gt.data, params), 0.0, 1.0))
    fg = Image(np.clip(_warp(sample.fg.data, params), 0.0, 1.0))
    bg = Image(np.clip(_warp(sample.bg.data, params), 0.0, 1.0))
    partition = RegionPartition(_warp(sample.partition.labels, params, nearest=True))
    return MattingSample(composite(fg, bg, alpha), alpha, partition, fg, bg)


def augment(sample: MattingSample, seed: int, config: AugmentConfig = AugmentConfig()) -> MattingSample:
    rng = np.random.default_rng(seed)
    h, w = sample.alpha_gt.shape
    return apply_augment(sample, sample_augment_params(h, w, config, rng))


# --- procedural generators ---------------------------------------------------


def _smooth_noise(rng: np.random.Generator, height: int, width: int, grid: int, channels: int) -> np.ndarray:
    coarse = rng.random((grid, grid, channels)).astype(np.float32)
    return cv2.resize(coarse, (width, height), interpolation=cv2.INTER_CUBIC).reshape(height, width, channels)


def generate_background(seed: int, height: int, width: int) -> Image:
    """Gradient-plus-noise stand-in for natural background photos."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB6]))
    c0, c1 = rng.random(3), rng.random(3)
    t = np.linspace(0.0, 1.0, height, dtype=np.float32)[:, None, None]
    if rng.random() < 0.5:
        t = np.linspace(0.0, 1.0, width, dtype=np.float32)[None, :, None]
    grad = (1 - t) * c0[None, None, :] + t * c1[None, None, :]
    noise = _smooth_noise(rng, height, width, grid=8, channels=3)
    return Image(np.clip(0.7 * grad + 0.3 * noise, 0.0, 1.0).astype(np.float32))


def _blob_alpha(rng: np.random.Generator, height: int, width: int,
                center: tuple[float, float], radius: float) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float32)
    ry = radius * float(rng.uniform(0.6, 1.0))
    rx = radius * float(rng.uniform(0.6, 1.0))
    theta = float(rng.uniform(0, np.pi))
    dy, dx = yy - center[0], xx - center[1]
    u = np.cos(theta) * dy + np.sin(theta) * dx
    v = -np.sin(theta) * dy + np.cos(theta) * dx
    # wobble the radius so the silhouette is not a clean ellipse
    ang = np.arctan2(v, u)
    wobble = 1.0 + 0.15 * np.sin(ang * int(rng.integers(2, 5)) + float(rng.uniform(0, 2 * np.pi)))
    d = np.sqrt((u / ry) ** 2 + (v / rx) ** 2) / wobble
    edge = float(rng.uniform(0.08, 0.2))
    alpha = np.clip((1.0 - d) / edge + 1.0, 0.0, 1.0)
    return alpha.astype(np.float32)


def _hair_strokes(rng: np.random.Generator, alpha: np.ndarray, n_strokes: int) -> np.ndarray:
    """Random walks leaving thin Gaussian-falloff strands anchored on the blob."""
    h, w = alpha.shape
    out = alpha.copy()
    border = np.argwhere((alpha > 0.4) & (alpha < 0.9))
    if len(border) == 0:
        return out
    yy, xx = np.mgrid[-3:4, -3:4].astype(np.float32)
    for _ in range(n_strokes):
        r, c = border[rng.integers(len(border))].astype(np.float32)
        direction = rng.uniform(0, 2 * np.pi)
        # keep strands below 0.5 so {alpha > 0.5} stays one component per blob
        amp = float(rng.uniform(0.25, 0.45))
        sigma = float(rng.uniform(0.6, 1.2))
        for step in range(int(rng.integers(20, 45))):
            direction += float(rng.normal(0.0, 0.35))
            r += np.sin(direction) * 1.5
            c += np.cos(direction) * 1.5
            ri, ci = int(round(r)), int(round(c))
            if not (3 <= ri < h - 3 and 3 <= ci < w - 3):
                break
            stamp = amp * np.exp(-(yy**2 + xx**2) / (2 * sigma**2))
            region = out[ri - 3 : ri + 4, ci - 3 : ci + 4]
            np.maximum(region, stamp.astype(np.float32), out=region)
            amp *= 0.985
    return np.clip(out, 0.0, 1.0)


def generate_foreground_objects(
    seed: int, height: int, width: int, n_objects: int = 1
) -> tuple[Image, list[AlphaMatte]]:
    """Foreground texture plus one soft-edged alpha per object.

    With two objects the supports are placed in opposite halves so
    {alpha > 0.5} has exactly one 4-connected component per object.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF6]))
    tex = _smooth_noise(rng, height, width, grid=6, channels=3)
    tint = rng.random(3).astype(np.float32)
    fg = Image(np.clip(0.5 * tex + 0.5 * tint[None, None, :], 0.0, 1.0))

    alphas: list[AlphaMatte] = []
    if n_objects == 1:
        centers = [(height * float(rng.uniform(0.35, 0.65)), width * float(rng.uniform(0.35, 0.65)))]
        radius = min(height, width) * float(rng.uniform(0.22, 0.32))
    else:
        side = rng.permutation(n_objects)
        centers = []
        for i in range(n_objects):
            cx = width * (0.25 + 0.5 * side[i] / max(1, n_objects - 1))
            cy = height * float(rng.uniform(0.35, 0.65))
            centers.append((cy, cx))
        radius = min(height, width) * float(rng.uniform(0.14, 0.2))
    for center in centers:
        a = _blob_alpha(rng, height, width, center, radius)
        a = _hair_strokes(rng, a, n_strokes=int(rng.integers(4, 9)))
        alphas.append(AlphaMatte(a))
    return fg, alphas


def generate_synthetic_foreground(
    seed: int, height: int, width: int, two_objects: bool = False
) -> tuple[Image, AlphaMatte]:
    fg, alphas = generate_foreground_objects(seed, height, width, n_objects=2 if two_objects else 1)
    union = alphas[0].data
    for a in alphas[1:]:
        union = np.maximum(union, a.data)
    return fg, AlphaMatte(union)


# --- dataset generation -------------------------------------------------------


@dataclass(frozen=True)
class DatasetConfig:
    n_foregrounds: int = 64
    n_backgrounds: int = 4
    size: int = 128
    seed: int = 0
    ambiguous_fraction: float = 0.25
    dilate_r: int = 3
    erode_r: int = 3


def _centroid(alpha: np.ndarray) -> tuple[int, int]:
    mask = alpha >= 0.99
    if not mask.any():
        mask = alpha > 0.5
    coords = np.argwhere(mask)
    r, c = coords.mean(axis=0)
    return int(round(r)), int(round(c))


def build_dataset(root: str | Path, config: DatasetConfig = DatasetConfig()) -> Path:
    """Write fg/ bg/ alpha/ composite/ trees plus a JSON-lines manifest.

    Ambiguous entries composite two objects but keep only one in the ground
    truth; the manifest carries oracle click positions (target centroid as a
    foreground click, distractor centroid as a background click).
    """
    from . import io as cmio

    root = Path(root)
    for sub in ("fg", "bg", "alpha", "composite"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    master = np.random.SeedSequence(config.seed)
    fg_seeds = master.spawn(config.n_foregrounds)
    size = config.size
    records = []
    bg_images = [
        generate_background(config.seed * 1000 + 7 * b + 1, size, size)
        for b in range(config.n_backgrounds)
    ]
    for b, bg in enumerate(bg_images):
        cmio.save_image_png(bg, root / "bg" / f"bg_{b:03d}.png")

    index = 0
    for f, seq in enumerate(fg_seeds):
        rng = np.random.default_rng(seq)
        fg_seed = int(rng.integers(2**31))
        ambiguous = bool(rng.random() < config.ambiguous_fraction)
        n_obj = 2 if ambiguous else 1
        fg, alphas = generate_foreground_objects(fg_seed, size, size, n_objects=n_obj)
        cmio.save_image_png(fg, root / "fg" / f"fg_{f:03d}.png")
        for b in range(config.n_backgrounds):
            target = int(rng.integers(n_obj)) if ambiguous else 0
            union = alphas[0].data
            for a in alphas[1:]:
                union = np.maximum(union, a.data)
            img = composite(fg, bg_images[b], AlphaMatte(union))
            alpha_gt = alphas[target]
            name = f"{index:05d}"
            cmio.save_matte_png(alpha_gt, root / "alpha" / f"{name}.png")
            cmio.save_image_png(img, root / "composite" / f"{name}.png")
            rec = {
                "index": index,
                "fg": f"fg/fg_{f:03d}.png",
                "bg": f"bg/bg_{b:03d}.png",
                "alpha": f"alpha/{name}.png",
                "composite": f"composite/{name}.png",
                "seed": fg_seed,
                "ambiguous": ambiguous,
            }
            if ambiguous:
                distractor = alphas[1 - target]
                rec["oracle_fg_click"] = list(_centroid(alpha_gt.data))
                rec["oracle_bg_click"] = list(_centroid(distractor.data))
            records.append(rec)
            index += 1

    manifest = root / "manifest.jsonl"
    with manifest.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return manifest


def load_manifest(manifest_path: str | Path) -> list[dict]:
    path = Path(manifest_path)
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
