from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .features import DEFAULT_CELL, FEATURE_DECIMALS
from .matrix import CENTERS
from .pointset import DEFAULT_DECIMALS
from .raster import DEFAULT_THRESHOLD, POLARITIES


@dataclass(frozen=True)
class RunConfig:
    """Every knob of the solving pipeline. Defaults reproduce the reference run."""

    threshold: int = DEFAULT_THRESHOLD
    z_threshold: float = 2.0
    cloud_decimals: int = DEFAULT_DECIMALS
    feature_decimals: int = FEATURE_DECIMALS
    polarity: str = "ink"
    center: str = "mean"
    complexity: dict = field(default_factory=dict)
    parallelism: int = 1
    crop_caption: bool = False
    gutter_fallback: bool = True
    chirality_feature: bool = False
    symmetry_cell: float = DEFAULT_CELL

    def __post_init__(self):
        if not self.z_threshold > 0:
            raise ValueError(f"z threshold must be positive, got {self.z_threshold}")
        for name in ("cloud_decimals", "feature_decimals"):
            if not 0 <= getattr(self, name) <= 4:
                raise ValueError(f"{name} must lie in [0, 4], got {getattr(self, name)}")
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold must lie in [0, 255], got {self.threshold}")
        if self.polarity not in POLARITIES:
            raise ValueError(f"polarity must be one of {POLARITIES}")
        if self.center not in CENTERS:
            raise ValueError(f"center must be one of {CENTERS}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if not self.symmetry_cell > 0:
            raise ValueError("symmetry cell must be positive")

    def as_dict(self) -> dict:
        return asdict(self)
