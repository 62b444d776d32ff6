"""Point clouds in Cartesian coordinates and their principal-axis normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCloud
from .raster import BinaryRaster

ISOTROPY_TOL = 1e-6
MOMENT_TOL = 1e-9
DEFAULT_DECIMALS = 1


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Set of distinct 2-D points stored as an ``(N, 2)`` float array.

    Duplicates are merged on construction and rows are kept in lexicographic
    order, so two clouds holding the same set compare equal.
    """

    points: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if not np.isfinite(arr).all():
            raise ValueError("point coordinates must be finite")
        # fold -0.0 into 0.0 so the set semantics do not split on sign
        arr = arr + 0.0
        if len(arr) > 1:
            arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
            arr = arr[np.concatenate([[True], (np.diff(arr, axis=0) != 0).any(axis=1)])]
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())


@dataclass(frozen=True)
class PrincipalFrame:
    centroid: tuple[float, float]
    axis_major: tuple[float, float]
    axis_minor: tuple[float, float]
    var_major: float
    var_minor: float

    @property
    def rotation(self) -> np.ndarray:
        """Rows are the major and minor axes; maps centred points into the frame."""
        return np.array([self.axis_major, self.axis_minor])


def to_points(binary: BinaryRaster) -> PointCloud:
    """One point per foreground pixel: ``x`` = column, ``y`` = height - 1 - row."""
    rows, cols = np.nonzero(binary.bits)
    return PointCloud(np.column_stack([cols, binary.height - 1 - rows]))


def _third_moment(proj: np.ndarray) -> float:
    return float(np.mean(proj ** 3))


def _orient(proj: np.ndarray, scale: float) -> float:
    """Return +1, -1 or 0: the sign that gives ``sign * proj`` non-negative skew.

    Near-zero third moments fall back to making the farthest projection
    positive; 0 means even that is tied (a symmetric cloud).
    """
    m3 = _third_moment(proj)
    if abs(m3) > MOMENT_TOL * max(scale, 1e-300) ** 1.5:
        return 1.0 if m3 > 0 else -1.0
    if proj.size == 0:
        return 0.0
    hi, lo = float(proj.max()), float(-proj.min())
    tol = MOMENT_TOL * max(scale, 1e-300) ** 0.5
    if abs(hi - lo) <= tol:
        return 0.0
    return 1.0 if hi > lo else -1.0


def _canonical_axis(axis: np.ndarray) -> np.ndarray:
    # last resort for symmetric clouds: first clearly non-zero component positive
    lead = axis[0] if abs(axis[0]) > 1e-12 else axis[1]
    return axis if lead > 0 else -axis


def _isotropic(var_major: float, var_minor: float) -> bool:
    return (var_major - var_minor) / max(var_major, 1e-12) < ISOTROPY_TOL


def principal_frame(cloud: PointCloud) -> PrincipalFrame:
    """Centroid, principal axes and axis variances (population covariance).

    The major axis is signed so projections onto it have non-negative third
    moment (ties: farthest projection positive, then first component
    positive); the minor axis is the major turned 90 degrees counter-clockwise,
    keeping the frame right-handed. Nearly isotropic clouds get the identity
    axes.
    """
    if cloud.count == 0:
        raise EmptyCloud("principal frame of an empty cloud")
    pts = cloud.points
    centroid = pts.mean(axis=0)
    centred = pts - centroid
    cov = centred.T @ centred / cloud.count
    evals, evecs = np.linalg.eigh(cov)
    var_minor, var_major = (max(float(v), 0.0) for v in evals)

    if _isotropic(var_major, var_minor):
        major = np.array([1.0, 0.0])
    else:
        major = evecs[:, 1] / np.linalg.norm(evecs[:, 1])
        sign = _orient(centred @ major, var_major)
        major = _canonical_axis(major) if sign == 0 else major * sign
    minor = np.array([-major[1], major[0]]) + 0.0
    return PrincipalFrame(
        centroid=(float(centroid[0]), float(centroid[1])),
        axis_major=(float(major[0]), float(major[1])),
        axis_minor=(float(minor[0]), float(minor[1])),
        var_major=var_major,
        var_minor=var_minor,
    )


def round_points(points: np.ndarray, decimals: int) -> np.ndarray:
    return np.round(points, decimals) + 0.0


def normalize(cloud: PointCloud, decimals: int = DEFAULT_DECIMALS, reflect: bool = True) -> PointCloud:
    """Centre ``cloud`` on its centroid and rotate it into its principal frame.

    With ``reflect`` (the default) the minor coordinate is additionally flipped
    to non-negative skew, so a figure and its mirror image normalize to the
    same set; handedness is deliberately lost here. Nearly isotropic clouds are
    only centred. Coordinates are rounded to ``decimals`` places and points
    that collide after rounding are merged.
    """
    frame = principal_frame(cloud)
    centred = cloud.points - np.array(frame.centroid)
    projected = centred @ frame.rotation.T
    if reflect and not _isotropic(frame.var_major, frame.var_minor):
        if _orient(projected[:, 1], frame.var_minor) < 0:
            projected[:, 1] *= -1.0
    return PointCloud(round_points(projected, decimals))


def transform(cloud: PointCloud, angle: float = 0.0, scale: float = 1.0, shift=(0.0, 0.0)) -> PointCloud:
    """Rotate by ``angle`` radians, scale, then translate. Used by tests and tooling."""
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return PointCloud(scale * cloud.points @ rot.T + np.asarray(shift, dtype=float))
