"""From six panels to a verdict: encode, score, filter by z-score, vote."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .config import RunConfig
from .features import PanelInput, compute_feature_matrix
from .matrix import N_PANELS, FeatureMatrix, zscore_row
from .pointset import normalize, to_points
from .raster import (
    GrayRaster,
    background_value,
    binarize,
    crop_caption,
    default_caption_region,
    panel_caption_region,
    segment_grid,
)

__all__ = [
    "FeatureMatrix", "Selection", "Verdict", "PANEL_NAMES",
    "zscore_row", "select_features", "vote", "encode_panel",
    "encode_problem", "matrix_from_inputs", "feature_matrix", "solve_matrix", "solve_problem", "split_sheet", "solve_sheet",
]

PANEL_NAMES = ("top-left", "top-center", "top-right", "bottom-left", "bottom-center", "bottom-right")


class Selection(NamedTuple):
    feature_id: str
    panel: int
    z: float


@dataclass
class Verdict:
    panel: int | None
    selected: list[Selection] = field(default_factory=list)
    votes: list[int] = field(default_factory=lambda: [0] * N_PANELS)
    tie_break_used: bool = False
    explanation: str = ""
    warnings: list[str] = field(default_factory=list)
    problem_id: str | None = None

    @property
    def skipped(self) -> bool:
        return self.panel is None

    @property
    def outcome(self) -> str:
        return "skipped" if self.skipped else "answer"

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "outcome": self.outcome,
            "panel": self.panel,
            "votes": list(self.votes),
            "features": [{"id": s.feature_id, "panel": s.panel, "z": round(s.z, 6)} for s in self.selected],
            "skipped": self.skipped,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_tsv(self) -> str:
        feats = ";".join(f"{s.feature_id}@{s.panel}:{s.z:.3f}" for s in self.selected)
        panel = "" if self.skipped else str(self.panel)
        return "\t".join([self.problem_id or "", self.outcome, panel,
                          ",".join(map(str, self.votes)), feats])


def select_features(matrix: FeatureMatrix, z_threshold: float = 2.0) -> list[Selection]:
    """Rows whose largest |z| reaches ``z_threshold``, each naming its argmax panel."""
    chosen = []
    for fid, zrow in zip(matrix.feature_ids, matrix.zscores):
        absz = np.abs(zrow)
        panel = int(np.argmax(absz))
        if absz[panel] >= z_threshold:
            chosen.append(Selection(fid, panel, float(absz[panel])))
    return chosen


def _explain(panel, selected, votes, tie_break_used, z_threshold) -> str:
    if panel is None:
        return f"skipped: no feature exceeded δ_z={z_threshold:g}"
    lines = [f"odd panel: {panel + 1} ({PANEL_NAMES[panel]}), {votes[panel]} of {len(selected)} votes"
             + (" after simplicity tie-break" if tie_break_used else "")]
    for s in selected:
        lines.append(f"  {s.feature_id}: panel {s.panel + 1} ({PANEL_NAMES[s.panel]}), |z|={s.z:.3f}")
    return "\n".join(lines)


def vote(selections, complexity: dict[str, int], z_threshold: float = 2.0) -> Verdict:
    """One vote per selected feature for its panel; most votes wins.

    Ties are re-tallied among the tied panels with weight 1/rank per feature,
    and a remaining tie goes to the panel backed by the simplest feature.
    """
    selections = list(selections)
    votes = [0] * N_PANELS
    for s in selections:
        votes[s.panel] += 1
    if not selections:
        return Verdict(None, [], votes, False, _explain(None, [], votes, False, z_threshold))

    top = max(votes)
    tied = [p for p in range(N_PANELS) if votes[p] == top]
    tie_break_used = len(tied) > 1
    if not tie_break_used:
        winner = tied[0]
    else:
        weight = {p: sum((Fraction(1, complexity[s.feature_id]) for s in selections if s.panel == p), Fraction(0))
                  for p in tied}
        best = max(weight.values())
        tied = [p for p in tied if weight[p] == best]
        simplest = {p: min(complexity[s.feature_id] for s in selections if s.panel == p) for p in tied}
        winner = min(tied, key=lambda p: simplest[p])
    return Verdict(winner, selections, votes, tie_break_used,
                   _explain(winner, selections, votes, tie_break_used, z_threshold))


def encode_panel(panel: GrayRaster, config: RunConfig) -> PanelInput:
    binary = binarize(panel, config.threshold, config.polarity)
    raw = to_points(binary)
    normalized = normalize(raw, config.cloud_decimals) if raw.count else raw
    return PanelInput(binary, raw, normalized)


def encode_problem(panels, config: RunConfig) -> list[PanelInput]:
    """Blank the caption (if configured) and encode all six panels."""
    panels = list(panels)
    if len(panels) != N_PANELS:
        raise ValueError(f"expected {N_PANELS} panels, got {len(panels)}")
    if config.crop_caption:
        first = panels[0]
        region = panel_caption_region(first.width, first.height)
        panels[0] = crop_caption(first, region, background_value(config.polarity))
    return [encode_panel(p, config) for p in panels]


def matrix_from_inputs(inputs, config: RunConfig) -> FeatureMatrix:
    return compute_feature_matrix(
        inputs,
        decimals=config.feature_decimals,
        cell=config.symmetry_cell,
        chirality=config.chirality_feature,
        ranks=config.complexity or None,
        center=config.center,
    )


def feature_matrix(panels, config: RunConfig) -> FeatureMatrix:
    return matrix_from_inputs(encode_problem(panels, config), config)


def solve_matrix(matrix: FeatureMatrix, config: RunConfig = RunConfig()) -> Verdict:
    ranks = dict(zip(matrix.feature_ids, matrix.complexity))
    verdict = vote(select_features(matrix, config.z_threshold), ranks, config.z_threshold)
    verdict.warnings = list(matrix.warnings)
    return verdict


def solve_problem(panels, config: RunConfig = RunConfig(), problem_id: str | None = None) -> Verdict:
    """Full pipeline on six grayscale panels given in row-major order."""
    verdict = solve_matrix(feature_matrix(panels, config), config)
    verdict.problem_id = problem_id
    return verdict


def split_sheet(sheet: GrayRaster, config: RunConfig) -> list[GrayRaster]:
    if config.crop_caption:
        sheet = crop_caption(sheet, default_caption_region(sheet), background_value(config.polarity))
    return segment_grid(sheet, config.threshold, config.polarity, fallback=config.gutter_fallback)


def solve_sheet(sheet: GrayRaster, config: RunConfig = RunConfig(), problem_id: str | None = None) -> Verdict:
    """Segment a composite 3x2 problem image and solve it."""
    panels = split_sheet(sheet, config)
    # the caption, if any, was blanked on the sheet already
    return solve_problem(panels, replace(config, crop_caption=False), problem_id)
