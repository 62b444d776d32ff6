"""Per-panel Gestalt descriptors and the feature registry.

Every feature maps one panel to a scalar. Which representation a feature
reads is fixed by its ``stage``:

* ``raw``: the point cloud in image orientation (before unrotation),
* ``normalized``: the centred, principal-axis aligned, rounded cloud,
* ``raster``: the binary raster (connectivity does not survive rounding).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import EmptyCloud, TooFewPoints
from .matrix import N_PANELS, FeatureMatrix
from .pointset import PointCloud, principal_frame
from .raster import BinaryRaster

DEFAULT_CELL = 2.0
FEATURE_DECIMALS = 2
VAR_FLOOR = 1e-12

FOREGROUND_CONNECTIVITY = np.ones((3, 3), dtype=bool)
BACKGROUND_CONNECTIVITY = ndimage.generate_binary_structure(2, 1)


# --------------------------------------------------------------------------
# Point-cloud features
# --------------------------------------------------------------------------


def feat_density(cloud: PointCloud) -> float:
    return float(cloud.count)


def feat_orientation(cloud: PointCloud) -> float:
    """Absolute Pearson correlation between x and y of the raw cloud.

    Returns 0 when either coordinate is (nearly) constant.
    """
    if cloud.count < 2:
        raise TooFewPoints(f"orientation needs at least 2 points, got {cloud.count}")
    x = cloud.x - cloud.x.mean()
    y = cloud.y - cloud.y.mean()
    vx, vy = np.mean(x * x), np.mean(y * y)
    if vx < VAR_FLOOR or vy < VAR_FLOOR:
        return 0.0
    r = np.mean(x * y) / np.sqrt(vx * vy)
    return float(min(abs(r), 1.0))


def feat_minor_variance(cloud: PointCloud) -> float:
    """Variance across the principal axis; zero for collinear points."""
    return principal_frame(cloud).var_minor


def feat_extent(cloud: PointCloud) -> float:
    """Total variance (trace of the covariance), a rotation-free size proxy."""
    frame = principal_frame(cloud)
    return frame.var_major + frame.var_minor


def feat_chirality(cloud: PointCloud) -> float:
    """Signed third central moment of the raw x coordinates, scaled by the
    total variance to the power 1.5.

    A left-right mirror flips its sign, so upright figures of opposite
    handedness separate; under arbitrary rotations it carries no handedness
    information. Scaling by the total rather than the x variance keeps
    near-vertical figures from blowing up.
    """
    if cloud.count < 2:
        raise TooFewPoints(f"chirality needs at least 2 points, got {cloud.count}")
    x = cloud.x - cloud.x.mean()
    y = cloud.y - cloud.y.mean()
    total = np.mean(x * x) + np.mean(y * y)
    if total < VAR_FLOOR:
        return 0.0
    return float(np.mean(x ** 3) / total ** 1.5)


@dataclass(frozen=True)
class SymmetryProfile:
    y_means: dict[float, float]
    x_means: dict[float, float]
    bucket_counts: dict[float, int]


def _bucket_means(keys: np.ndarray, values: np.ndarray, cell: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.round(keys / cell).astype(np.int64)
    uniq, inverse, counts = np.unique(idx, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=values, minlength=len(uniq))
    return np.round(uniq * cell, 12) + 0.0, sums / counts, counts


def symmetry_profile(cloud: PointCloud, cell: float = DEFAULT_CELL) -> SymmetryProfile:
    """Mean y per x-bucket and mean x per y-bucket of a normalized cloud."""
    if cloud.count == 0:
        raise EmptyCloud("symmetry profile of an empty cloud")
    xk, y_means, x_counts = _bucket_means(cloud.x, cloud.y, cell)
    yk, x_means, _ = _bucket_means(cloud.y, cloud.x, cell)
    return SymmetryProfile(
        y_means={float(k): float(v) for k, v in zip(xk, y_means)},
        x_means={float(k): float(v) for k, v in zip(yk, x_means)},
        bucket_counts={float(k): int(n) for k, n in zip(xk, x_counts)},
    )


def feat_sym_y(cloud: PointCloud, cell: float = DEFAULT_CELL) -> float:
    """Population variance of the per-column mean heights; 0 for a figure
    mirrored about the x-axis."""
    if cloud.count == 0:
        raise EmptyCloud("symmetry of an empty cloud")
    _, means, _ = _bucket_means(cloud.x, cloud.y, cell)
    return float(np.var(means))


def feat_sym_x(cloud: PointCloud, cell: float = DEFAULT_CELL) -> float:
    if cloud.count == 0:
        raise EmptyCloud("symmetry of an empty cloud")
    _, means, _ = _bucket_means(cloud.y, cloud.x, cell)
    return float(np.var(means))


def feat_mirror_gap(cloud: PointCloud, cell: float = DEFAULT_CELL) -> float:
    """Fraction of points above the x-axis whose reflection has no partner
    at or below it within ``cell`` (Chebyshev distance)."""
    if cloud.count == 0:
        raise EmptyCloud("mirror gap of an empty cloud")
    pts = cloud.points
    upper = pts[pts[:, 1] > 0]
    lower = pts[pts[:, 1] <= 0]
    if len(upper) == 0:
        return 0.0
    if len(lower) == 0:
        return 1.0
    mirrored = upper * np.array([1.0, -1.0])
    dist, _ = cKDTree(lower).query(mirrored, k=1, p=np.inf, distance_upper_bound=cell * (1 + 1e-9))
    return float(np.mean(np.isinf(dist)))


# --------------------------------------------------------------------------
# Raster topology
# --------------------------------------------------------------------------


class RegionGraph(NamedTuple):
    n_foreground: int
    n_background: int
    depth: int


def _region_graph(bits: np.ndarray) -> RegionGraph:
    """Label foreground (8-connected) and background (4-connected) regions on a
    one-pixel padded copy, then take breadth-first depths from the outer
    background through the region adjacency tree."""
    padded = np.pad(np.asarray(bits, dtype=bool), 1)
    fg_labels, n_fg = ndimage.label(padded, structure=FOREGROUND_CONNECTIVITY)
    bg_labels, n_bg = ndimage.label(~padded, structure=BACKGROUND_CONNECTIVITY)
    if n_fg == 0:
        return RegionGraph(0, n_bg, 0)

    # node ids: background regions 1..n_bg, foreground regions n_bg+1..n_bg+n_fg
    nodes = np.where(padded, fg_labels + n_bg, bg_labels)
    pairs = []
    for head, tail in (
        ((slice(None), slice(None, -1)), (slice(None), slice(1, None))),
        ((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
    ):
        edge = padded[head] != padded[tail]
        pairs.append(np.column_stack([nodes[head][edge], nodes[tail][edge]]))
    pairs = np.sort(np.concatenate(pairs), axis=1)
    span = n_bg + n_fg + 1
    codes = np.unique(pairs[:, 0] * span + pairs[:, 1])

    adjacency: dict[int, list[int]] = {}
    for u, v in zip((codes // span).tolist(), (codes % span).tolist()):
        adjacency.setdefault(u, []).append(v)
        adjacency.setdefault(v, []).append(u)
    outer = int(bg_labels[0, 0])
    depth = {outer: 0}
    queue = deque([outer])
    while queue:
        u = queue.popleft()
        for v in adjacency.get(u, ()):
            if v not in depth:
                depth[v] = depth[u] + 1
                queue.append(v)
    return RegionGraph(n_fg, n_bg, max(depth.values()))


_last_graph: tuple = (None, None)


def _cached_graph(binary: BinaryRaster) -> RegionGraph:
    # contour count and nesting depth read the same raster back to back; the
    # entry is one tuple so concurrent readers never see a mixed pair, and
    # holding the raster keeps its identity from being reused
    global _last_graph
    held, graph = _last_graph
    if held is binary:
        return graph
    graph = _region_graph(binary.bits)
    _last_graph = (binary, graph)
    return graph


def feat_contour_count(binary: BinaryRaster) -> float:
    """Foreground components plus enclosed holes.

    An open stroke counts 1 and a closed loop counts 2, which is what lets
    closure register.
    """
    graph = _cached_graph(binary)
    return float(graph.n_foreground + graph.n_background - 1)


def feat_nesting_depth(binary: BinaryRaster) -> float:
    """Depth of the deepest region in the containment tree (outer background is 0)."""
    return float(_cached_graph(binary).depth)


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureDescriptor:
    id: str
    complexity_rank: int
    stage: str
    func: Callable
    uses_cell: bool = False
    optional: bool = False


REGISTRY: tuple[FeatureDescriptor, ...] = (
    FeatureDescriptor("density", 1, "raw", feat_density),
    FeatureDescriptor("extent", 2, "normalized", feat_extent),
    FeatureDescriptor("contour_count", 3, "raster", feat_contour_count),
    FeatureDescriptor("nesting_depth", 4, "raster", feat_nesting_depth),
    FeatureDescriptor("minor_variance", 5, "normalized", feat_minor_variance),
    FeatureDescriptor("orientation", 6, "raw", feat_orientation),
    FeatureDescriptor("sym_y", 7, "normalized", feat_sym_y, uses_cell=True),
    FeatureDescriptor("sym_x", 8, "normalized", feat_sym_x, uses_cell=True),
    FeatureDescriptor("mirror_gap", 9, "normalized", feat_mirror_gap, uses_cell=True),
    FeatureDescriptor("chirality", 10, "raw", feat_chirality, optional=True),
)


def active_features(chirality: bool = True, ranks: dict[str, int] | None = None) -> list[FeatureDescriptor]:
    """Registry entries in use, re-ranked by ``ranks`` overrides and ordered by rank."""
    chosen = []
    for desc in REGISTRY:
        if desc.optional and not chirality:
            continue
        if ranks and desc.id in ranks:
            desc = FeatureDescriptor(desc.id, int(ranks[desc.id]), desc.stage, desc.func,
                                     desc.uses_cell, desc.optional)
        chosen.append(desc)
    if ranks:
        unknown = set(ranks) - {d.id for d in REGISTRY}
        if unknown:
            raise ValueError(f"unknown feature ids in rank overrides: {sorted(unknown)}")
    order = [d.complexity_rank for d in chosen]
    if len(set(order)) != len(order) or min(order) < 1:
        raise ValueError(f"complexity ranks must be distinct positive integers, got {order}")
    return sorted(chosen, key=lambda d: d.complexity_rank)


class PanelInput(NamedTuple):
    binary: BinaryRaster
    raw: PointCloud
    normalized: PointCloud


def compute_feature_matrix(
    panels,
    decimals: int = FEATURE_DECIMALS,
    cell: float = DEFAULT_CELL,
    chirality: bool = True,
    ranks: dict[str, int] | None = None,
    center: str = "mean",
) -> FeatureMatrix:
    """Evaluate every active feature on six ``(binary, raw, normalized)`` panels.

    Values are rounded to ``decimals`` places. Empty panels and degenerate
    inputs score 0 and leave a warning instead of raising.
    """
    panels = [PanelInput(*p) for p in panels]
    if len(panels) != N_PANELS:
        raise ValueError(f"expected {N_PANELS} panels, got {len(panels)}")
    features = active_features(chirality, ranks)
    values = np.zeros((len(features), N_PANELS))
    warnings = []
    for j, panel in enumerate(panels):
        if panel.raw.count == 0:
            warnings.append(f"panel {j + 1}: no foreground pixels, all features set to 0")
            continue
        for i, desc in enumerate(features):
            arg = {"raw": panel.raw, "normalized": panel.normalized, "raster": panel.binary}[desc.stage]
            try:
                value = desc.func(arg, cell=cell) if desc.uses_cell else desc.func(arg)
            except (EmptyCloud, TooFewPoints) as exc:
                warnings.append(f"panel {j + 1}: {desc.id} degenerate ({exc}), set to 0")
                value = 0.0
            values[i, j] = value
    values = np.round(values, decimals) + 0.0
    return FeatureMatrix(
        [d.id for d in features], values, [d.complexity_rank for d in features], warnings, center
    )
