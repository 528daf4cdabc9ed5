"""Click-driven interactive image matting with uncertainty-guided local refinement."""

from .domain import (AlphaMatte, ClickPoint, ClickSet, HintMap, Image, Polarity,
                     RegionLabel, RegionPartition, UncertaintyMap, validate)

__all__ = [
    "AlphaMatte", "ClickPoint", "ClickSet", "HintMap", "Image", "Polarity",
    "RegionLabel", "RegionPartition", "UncertaintyMap", "validate",
]

__version__ = "0.1.0"
