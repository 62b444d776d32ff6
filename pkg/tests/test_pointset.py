import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial import cKDTree

from oddity.errors import EmptyCloud
from oddity.pointset import PointCloud, normalize, principal_frame, to_points, transform
from oddity.raster import BinaryRaster

from oracles import eig2

coords = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
clouds = st.lists(st.tuples(coords, coords), min_size=3, max_size=60).map(PointCloud)
# pixel clouds: distinct integer points never merge when rounded after a rigid motion
pixel_clouds = st.lists(st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
                        min_size=3, max_size=80, unique=True).map(PointCloud)



@st.composite
def pixel_blobs(draw):
    """Anisotropic integer clouds of 20-200 distinct points."""
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    n = draw(st.integers(20, 200))
    spread = draw(st.floats(5, 25))
    ratio = draw(st.floats(0.2, 0.7))
    angle = draw(st.floats(0, math.pi))
    c, s = math.cos(angle), math.sin(angle)
    pts = rng.normal(size=(n, 2)) * [spread, spread * ratio] @ np.array([[c, s], [-s, c]])
    return PointCloud(np.unique(np.round(pts), axis=0))


def within_one_cell(a: PointCloud, b: PointCloud, cell: float = 0.1) -> bool:
    """Every point of each set has a partner in the other within ``cell`` per coordinate."""
    if a.count == 0 or b.count == 0:
        return a.count == b.count
    d_ab = cKDTree(b.points).query(a.points, p=np.inf)[0].max()
    d_ba = cKDTree(a.points).query(b.points, p=np.inf)[0].max()
    return max(d_ab, d_ba) <= cell + 1e-9


def gap(frame) -> float:
    return (frame.var_major - frame.var_minor) / max(frame.var_major, 1e-12)


# -- to_points --------------------------------------------------------------


def test_empty_raster_gives_empty_cloud():
    assert to_points(BinaryRaster(np.zeros((3, 4), bool))).count == 0


def test_row_zero_maps_to_top():
    bits = np.zeros((2, 2), bool)
    bits[0, 1] = True
    assert to_points(BinaryRaster(bits)).points.tolist() == [[1.0, 1.0]]


def test_diagonal_mapping():
    cloud = to_points(BinaryRaster(np.eye(3, dtype=bool)))
    assert cloud == PointCloud([(0, 2), (1, 1), (2, 0)])


def test_cloud_merges_duplicates_and_signed_zero():
    cloud = PointCloud([(0.0, 1.0), (-0.0, 1.0), (0.0, 1.0)])
    assert cloud.count == 1


# -- principal frame --------------------------------------------------------


def test_single_point_frame():
    f = principal_frame(PointCloud([(3, 4)]))
    assert f.centroid == (3.0, 4.0)
    assert f.axis_major == (1.0, 0.0) and f.axis_minor == (0.0, 1.0)
    assert (f.var_major, f.var_minor) == (0.0, 0.0)


def test_diagonal_line_frame():
    f = principal_frame(PointCloud([(-2, -2), (-1, -1), (0, 0), (1, 1), (2, 2)]))
    s = 1 / math.sqrt(2)
    assert np.allclose(np.abs(f.axis_major), [s, s])
    assert f.var_minor == pytest.approx(0.0, abs=1e-12)


def test_rectangle_corners_frame():
    f = principal_frame(PointCloud([(0, 0), (2, 0), (0, 1), (2, 1)]))
    assert f.centroid == (1.0, 0.5)
    assert np.allclose(f.axis_major, (1.0, 0.0))
    assert f.var_major == pytest.approx(1.0)
    assert f.var_minor == pytest.approx(0.25)


def test_empty_cloud_frame_raises():
    with pytest.raises(EmptyCloud):
        principal_frame(PointCloud(np.zeros((0, 2))))


@given(clouds)
def test_frame_invariants(cloud):
    f = principal_frame(cloud)
    major, minor = np.array(f.axis_major), np.array(f.axis_minor)
    assert abs(np.linalg.norm(major) - 1) < 1e-9 and abs(np.linalg.norm(minor) - 1) < 1e-9
    assert abs(major @ minor) < 1e-9
    assert np.linalg.det(np.array([major, minor])) == pytest.approx(1.0)
    assert f.var_major >= f.var_minor >= 0


@given(clouds)
def test_variances_match_closed_form(cloud):
    pts = cloud.points - cloud.points.mean(axis=0)
    cov = (pts.T @ pts / cloud.count).tolist()
    hi, lo = eig2(cov)
    f = principal_frame(cloud)
    scale = max(hi, 1.0)
    assert f.var_major == pytest.approx(hi, abs=1e-9 * scale)
    assert f.var_minor == pytest.approx(max(lo, 0.0), abs=1e-9 * scale)


# -- normalize ---------------------------------------------------------------


def test_centered_axis_aligned_cloud_unchanged():
    # zero mean, zero cross-covariance, wider in x, positive skew on both axes
    cloud = PointCloud([(-2, 0), (-1, 0), (3, 0), (0, 2), (0, -0.5), (0, -1.5)])
    f = principal_frame(cloud)
    assert np.allclose(f.centroid, 0)
    assert np.allclose(f.axis_major, (1, 0))
    assert normalize(cloud) == cloud


def test_rotated_and_translated_matches():
    rng = np.random.default_rng(7)
    cloud = PointCloud(rng.normal(size=(80, 2)) * [6.0, 2.0])
    moved = transform(cloud, math.radians(37), 1.0, (5, -3))
    assert within_one_cell(normalize(moved), normalize(cloud))


def test_mirror_chiral_shapes_coincide():
    # an L with unequal arms has no mirror symmetry of its own
    leg = [(0.0, y) for y in np.arange(0, 12, 0.5)]
    foot = [(x, 0.0) for x in np.arange(0.5, 6, 0.5)]
    ell = PointCloud(leg + foot)
    mirrored = PointCloud(ell.points * [-1.0, 1.0])
    a = normalize(transform(ell, math.radians(33), 1.0, (4, 9)))
    b = normalize(transform(mirrored, math.radians(-71), 1.0, (-2, 1)))
    assert within_one_cell(a, b)


def test_right_handed_mode_keeps_handedness():
    leg = [(0.0, y) for y in np.arange(0, 12, 0.5)]
    foot = [(x, 0.0) for x in np.arange(0.5, 6, 0.5)]
    ell = PointCloud(leg + foot)
    mirrored = PointCloud(ell.points * [-1.0, 1.0])
    a, b = normalize(ell, reflect=False), normalize(mirrored, reflect=False)
    assert not within_one_cell(a, b)
    assert within_one_cell(a, PointCloud(b.points * [1.0, -1.0]))


def test_normalize_empty_raises():
    with pytest.raises(EmptyCloud):
        normalize(PointCloud(np.zeros((0, 2))))


@given(pixel_clouds, st.floats(0, 2 * math.pi), coords, coords)
def test_rigid_motion_invariance(cloud, angle, dx, dy):
    assume(gap(principal_frame(cloud)) >= 0.1)
    assume(principal_frame(cloud).var_major > 1.0)
    moved = transform(cloud, angle, 1.0, (dx, dy))
    # the sign choice needs a clear skew to be stable
    f = principal_frame(cloud)
    proj = (cloud.points - f.centroid) @ np.array([f.axis_major, f.axis_minor]).T
    assume(abs(np.mean(proj[:, 0] ** 3)) > 1e-3 * f.var_major ** 1.5)
    assume(abs(np.mean(proj[:, 1] ** 3)) > 1e-3 * max(f.var_minor, 1e-6) ** 1.5)
    assert within_one_cell(normalize(moved), normalize(cloud))


@given(pixel_clouds)
def test_variance_alignment_and_centroid(cloud):
    out = normalize(cloud)
    # rounding moves each coordinate by at most half a cell
    assert out.x.var() >= out.y.var() - 0.1 * (np.abs(out.points).max() + 0.05)
    assert np.all(np.abs(out.points.mean(axis=0)) <= 0.1 + 1e-9)


@given(pixel_blobs())
def test_normalize_idempotent_within_rounding(cloud):
    # The second pass re-centres by up to half a cell and tilts the axes by
    # the rounding noise (about 0.006 rad at 25 px reach), then rounds
    # again, so a coordinate can land one grid step further: two cells.
    assume(cloud.count >= 20)
    f = principal_frame(cloud)
    proj = (cloud.points - f.centroid) @ np.array([f.axis_major, f.axis_minor]).T
    # both skews must be clear of zero, or rounding can flip an axis sign
    assume(gap(f) >= 0.3)
    assume(abs(np.mean(proj[:, 0] ** 3)) > 0.05 * f.var_major ** 1.5)
    assume(abs(np.mean(proj[:, 1] ** 3)) > 0.05 * max(f.var_minor, 1e-6) ** 1.5)
    once = normalize(cloud)
    assert within_one_cell(normalize(once), once, cell=0.2)
