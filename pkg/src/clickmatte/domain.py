"""Core value types shared across the package.

All pixel data is stored as float32 numpy arrays with (row, col) indexing,
origin at the top-left. Values are immutable after construction: arrays are
marked non-writeable so instances can be shared freely across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

SIGMA_FLOOR = 1e-4


class RegionLabel(enum.IntEnum):
    BACKGROUND = 0
    FOREGROUND = 1
    TRANSITION = 2


class Polarity(enum.Enum):
    FOREGROUND = "fg"
    BACKGROUND = "bg"


def _freeze(arr: np.ndarray, dtype=np.float32) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Image:
    """H x W x 3 float field in [0, 1], the observed composite."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]


@dataclass(frozen=True)
class AlphaMatte:
    """H x W per-pixel opacity in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class RegionPartition:
    """Per-pixel label in {BACKGROUND, FOREGROUND, TRANSITION}."""

    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", _freeze(self.labels, dtype=np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def mask(self, label: RegionLabel) -> np.ndarray:
        return self.labels == int(label)


@dataclass(frozen=True)
class ClickPoint:
    row: int
    col: int
    polarity: Polarity
    sequence_index: int


@dataclass(frozen=True)
class ClickSet:
    """Ordered user clicks plus the disk radius used to render them."""

    points: tuple[ClickPoint, ...] = ()
    radius: int = 15

    def __post_init__(self):
        pts = tuple(sorted(self.points, key=lambda p: p.sequence_index))
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def appended(self, row: int, col: int, polarity: Polarity) -> "ClickSet":
        nxt = max((p.sequence_index for p in self.points), default=-1) + 1
        return ClickSet(self.points + (ClickPoint(row, col, polarity, nxt),), self.radius)

    def without_last(self) -> "ClickSet":
        if not self.points:
            raise ValueError("click set is empty")
        return ClickSet(self.points[:-1], self.radius)


@dataclass(frozen=True)
class HintMap:
    """H x W field over {-1, 0, +1} encoding rendered clicks."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @classmethod
    def zeros(cls, height: int, width: int) -> "HintMap":
        return cls(np.zeros((height, width), dtype=np.float32))


@dataclass(frozen=True)
class UncertaintyMap:
    """H x W strictly positive Laplace scale per pixel."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _check_finite(arr: np.ndarray, violations: list[str]) -> None:
    if not np.all(np.isfinite(arr)):
        violations.append("finiteness: non-finite values present")


def validate(value) -> ValidationReport:
    """Check a domain value against its invariants; report-style, never raises."""
    v: list[str] = []
    if isinstance(value, Image):
        if value.data.ndim != 3 or value.data.shape[2] != 3:
            v.append("shape: expected H x W x 3")
        elif value.height < 1 or value.width < 1:
            v.append("shape: height and width must be >= 1")
        _check_finite(value.data, v)
        if v == [] and (value.data.min() < 0.0 or value.data.max() > 1.0):
            v.append("range: values outside [0,1]")
    elif isinstance(value, AlphaMatte):
        if value.data.ndim != 2:
            v.append("shape: expected H x W")
        _check_finite(value.data, v)
        if v == [] and (value.data.min() < 0.0 or value.data.max() > 1.0):
            v.append("range: values outside [0,1]")
    elif isinstance(value, RegionPartition):
        if value.labels.ndim != 2:
            v.append("shape: expected H x W")
        valid = {int(l) for l in RegionLabel}
        if not set(np.unique(value.labels)).issubset(valid):
            v.append("label set: labels outside {BACKGROUND, FOREGROUND, TRANSITION}")
    elif isinstance(value, HintMap):
        if value.data.ndim != 2:
            v.append("shape: expected H x W")
        _check_finite(value.data, v)
        if v == [] and not set(np.unique(value.data)).issubset({-1.0, 0.0, 1.0}):
            v.append("value set: entries must lie in {-1, 0, +1}")
    elif isinstance(value, UncertaintyMap):
        if value.data.ndim != 2:
            v.append("shape: expected H x W")
        _check_finite(value.data, v)
        if v == [] and value.data.min() < SIGMA_FLOOR:
            v.append(f"positivity: values below sigma floor {SIGMA_FLOOR}")
    elif isinstance(value, ClickSet):
        if value.radius < 1:
            v.append("radius: must be >= 1")
        seen = set()
        for p in value.points:
            if p.sequence_index in seen:
                v.append(f"sequence: duplicate index {p.sequence_index}")
            seen.add(p.sequence_index)
    else:
        v.append(f"unknown domain type: {type(value).__name__}")
    return ValidationReport(ok=not v, violations=v)
