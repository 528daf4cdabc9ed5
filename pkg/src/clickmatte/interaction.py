"""Rendering user clicks into the hint channel and simulating clicks for training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .domain import AlphaMatte, ClickSet, HintMap, Polarity


@dataclass(frozen=True)
class ClickSamplerConfig:
    p: float = 1.0 / 6.0
    radius: int = 15
    fg_alpha_threshold: float = 1.0
    bg_alpha_threshold: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")


def _disk(radius: int) -> np.ndarray:
    rr = np.arange(-radius, radius + 1)
    return (rr[:, None] ** 2 + rr[None, :] ** 2) <= radius * radius


def render_hint_map(clicks: ClickSet, height: int, width: int) -> HintMap:
    """Paint +-1 disks of radius `clicks.radius` around each click.

    Clicks are painted in sequence order, so where disks overlap the later
    click wins.
    """
    for p in clicks.points:
        if not (0 <= p.row < height and 0 <= p.col < width):
            raise ValueError(f"click {p.sequence_index} out of bounds: ({p.row}, {p.col})")
    hint = np.zeros((height, width), dtype=np.float32)
    r = clicks.radius
    disk = _disk(r)
    for p in clicks.points:
        value = 1.0 if p.polarity is Polarity.FOREGROUND else -1.0
        r0, r1 = max(0, p.row - r), min(height, p.row + r + 1)
        c0, c1 = max(0, p.col - r), min(width, p.col + r + 1)
        sub = disk[r0 - (p.row - r) : r1 - (p.row - r), c0 - (p.col - r) : c1 - (p.col - r)]
        region = hint[r0:r1, c0:c1]
        region[sub] = value
    return HintMap(hint)


def draw_click_count(rng: np.random.Generator, p: float) -> int:
    """Geometric click count on support {0, 1, 2, ...}; mean (1 - p) / p."""
    return int(rng.geometric(p)) - 1


def sample_clicks(alpha_gt: AlphaMatte, config: ClickSamplerConfig) -> ClickSet:
    """Draw a simulated click set from the ground-truth matte.

    The click count m follows a geometric distribution on {0, 1, 2, ...} with
    success probability p (mean (1-p)/p). Each click is FG or BG with equal
    probability; positions are uniform over the strict FG/BG region eroded by
    the click radius, falling back to the un-eroded region, and skipped when
    both are empty.
    """
    rng = np.random.default_rng(config.seed)
    m = draw_click_count(rng, config.p)

    alpha = alpha_gt.data
    fg_strict = alpha >= config.fg_alpha_threshold
    bg_strict = alpha <= config.bg_alpha_threshold
    structure = _disk(config.radius)
    regions = {}
    for polarity, strict in ((Polarity.FOREGROUND, fg_strict), (Polarity.BACKGROUND, bg_strict)):
        eroded = ndimage.binary_erosion(strict, structure=structure) if strict.any() else strict
        pool = eroded if eroded.any() else strict
        regions[polarity] = np.argwhere(pool)

    points: ClickSet = ClickSet((), config.radius)
    for _ in range(m):
        polarity = Polarity.FOREGROUND if rng.random() < 0.5 else Polarity.BACKGROUND
        coords = regions[polarity]
        if len(coords) == 0:
            continue
        row, col = coords[rng.integers(len(coords))]
        points = points.appended(int(row), int(col), polarity)
    return points
