"""Feature matrix container and per-row standard scores."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteInput

N_PANELS = 6
SIGMA_FLOOR = 1e-12
CENTERS = ("mean", "median")


def zscore_row(values, center: str = "mean") -> np.ndarray:
    """Standard scores of six panel values using the population deviation.

    Mean, deviations and variance are exact rationals, so equal values
    deviate by exactly zero, the result does not depend on panel order, and
    ``z**2 = d**2 / var`` never exceeds 5 before the final square root.
    A row whose deviation is below ``SIGMA_FLOOR`` scores all zeros.
    ``center="median"`` measures offsets from the median instead of the mean
    (the spread is still the population deviation about the mean).
    """
    vals = [float(v) for v in values]
    if len(vals) != N_PANELS:
        raise ValueError(f"expected {N_PANELS} values, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise NonFiniteInput(f"non-finite feature value in {vals}")
    if center not in CENTERS:
        raise ValueError(f"center must be one of {CENTERS}, got {center!r}")
    exact = [Fraction(v) for v in vals]
    mean = sum(exact) / N_PANELS
    var = sum((v - mean) ** 2 for v in exact) / N_PANELS
    if var == 0 or math.sqrt(float(var)) < SIGMA_FLOOR:
        return np.zeros(N_PANELS)
    if center == "mean":
        origin = mean
    else:
        ordered = sorted(exact)
        origin = (ordered[2] + ordered[3]) / 2
    return np.array([math.copysign(math.sqrt(float((v - origin) ** 2 / var)), v - origin) for v in exact])


@dataclass
class FeatureMatrix:
    """K features by six panels, with standard scores and tie-break ranks."""

    feature_ids: list[str]
    values: np.ndarray
    complexity: list[int]
    warnings: list[str] = field(default_factory=list)
    center: str = "mean"
    zscores: np.ndarray = field(init=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(len(self.feature_ids), N_PANELS)
        if len(self.complexity) != len(self.feature_ids):
            raise ValueError("one complexity rank per feature required")
        if len(set(self.feature_ids)) != len(self.feature_ids):
            raise ValueError("feature ids must be unique")
        self.zscores = np.array(
            [zscore_row(row, self.center) for row in self.values]
        ).reshape(len(self.feature_ids), N_PANELS)

    def __len__(self):
        return len(self.feature_ids)

    def row(self, feature_id: str) -> np.ndarray:
        return self.values[self.feature_ids.index(feature_id)]

    def permuted(self, order) -> "FeatureMatrix":
        """New matrix whose panel ``k`` is this matrix's panel ``order[k]``."""
        return FeatureMatrix(
            list(self.feature_ids), self.values[:, list(order)], list(self.complexity),
            list(self.warnings), self.center,
        )

    def to_csv(self) -> str:
        lines = ["feature," + ",".join(f"panel{k + 1}" for k in range(N_PANELS))]
        for fid, row in zip(self.feature_ids, self.values):
            lines.append(fid + "," + ",".join(f"{v:g}" for v in row))
        return "\n".join(lines) + "\n"
