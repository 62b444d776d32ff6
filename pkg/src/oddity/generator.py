"""Seeded synthesis of six-panel oddity problems with known answers.

Each concept builds one base figure per problem. Five panels show it under
random nuisance transforms (rotation, translation, mild scaling); the odd
panel shows a variant that breaks the concept. Figures are drawn with a
2-pixel stroke (points within one pixel of the curve), no anti-aliasing,
dark ink (0) on white paper (255).

Randomness comes only from ``numpy.random.PCG64`` through ``Generator.random``
so a ``(concept, seed)`` pair regenerates bit-identical pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import UnknownConcept
from .matrix import N_PANELS
from .raster import GrayRaster

PAPER, INK = 255, 0
HALF_STROKE = 1.0
MAX_POCKET = 4  # enclosed background specks up to this many pixels are inked
DEFAULT_SIZE = 120
MARGIN = 3.0
MIN_ROTATION_GAP = math.radians(10)
MIN_SHIFT_GAP = 5.0
SCALE_RANGE = (0.95, 1.05)
ANGLE_JITTER = 5.0  # degrees

# default violation magnitudes, in pixels at the 120-pixel panel size
CLOSURE_GAP = 12.0
ALIGNMENT_OFFSET = (10.0, 14.0)
SYMMETRY_SHIFT = (8.0, 12.0)
CENTER_OFFSET = (0.3, 0.5)  # fraction of the radius
CONNECTOR_GAP = 10.0
PARALLEL_TILT = (15.0, 25.0)  # degrees
HOMOTHECY_STRETCH = 1.6


# --------------------------------------------------------------------------
# Figures and rasterization
# --------------------------------------------------------------------------


@dataclass
class Figure:
    """Primitives in a y-up frame centred near the origin.

    ``strokes`` are polylines (closed ones repeat their first vertex),
    ``disks`` are filled ``(x, y, r)`` circles and ``fills`` are filled
    regions given as lists of rings combined with the even-odd rule.
    """

    strokes: list[np.ndarray] = field(default_factory=list)
    disks: list[tuple[float, float, float]] = field(default_factory=list)
    fills: list[list[np.ndarray]] = field(default_factory=list)

    def points(self) -> np.ndarray:
        pts = [s for s in self.strokes] + [r for f in self.fills for r in f]
        pts += [np.array([[x, y]]) for x, y, _ in self.disks]
        return np.concatenate(pts) if pts else np.zeros((0, 2))

    def radius(self) -> float:
        """Distance from the origin that bounds all ink."""
        r = 0.0
        for s in self.strokes:
            r = max(r, float(np.hypot(*s.T).max()) + HALF_STROKE)
        for ring in (ring for f in self.fills for ring in f):
            r = max(r, float(np.hypot(*ring.T).max()))
        for x, y, rad in self.disks:
            r = max(r, math.hypot(x, y) + rad)
        return r

    def map(self, fn, scale: float = 1.0) -> "Figure":
        return Figure(
            [fn(s) for s in self.strokes],
            [(*fn(np.array([[x, y]]))[0], r * scale) for x, y, r in self.disks],
            [[fn(r) for r in f] for f in self.fills],
        )

    def mirrored(self) -> "Figure":
        return self.map(lambda p: p * np.array([-1.0, 1.0]))

    def centred(self) -> "Figure":
        lo, hi = self.points().min(axis=0), self.points().max(axis=0)
        mid = (lo + hi) / 2
        return self.map(lambda p: p - mid)

    def placed(self, angle: float, scale: float, shift) -> "Figure":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        offset = np.asarray(shift, dtype=float)
        return self.map(lambda p: scale * p @ rot.T + offset, scale)


def _window(lo_x, hi_x, lo_y, hi_y, size):
    c0, c1 = max(int(math.floor(lo_x)), 0), min(int(math.ceil(hi_x)) + 1, size)
    r0, r1 = max(int(math.floor(lo_y)), 0), min(int(math.ceil(hi_y)) + 1, size)
    if c0 >= c1 or r0 >= r1:
        return None
    cols = np.arange(c0, c1, dtype=float)[None, :]
    rows = np.arange(r0, r1, dtype=float)[:, None]
    return (slice(r0, r1), slice(c0, c1)), cols, rows


_NEIGHBOURHOOD = np.stack(np.meshgrid(np.arange(5.0), np.arange(5.0)), axis=-1).reshape(-1, 2)


def _stroke_pixels(pts: np.ndarray) -> np.ndarray:
    """Integer (column, row) pixels within HALF_STROKE of the polyline ``pts``.

    Segments are split into pieces at most one pixel long, so every piece's
    ink lies in a fixed 5x5 neighbourhood of its lower corner.
    """
    a, d = pts[:-1], np.diff(pts, axis=0)
    pieces = np.maximum(1, np.ceil(np.hypot(d[:, 0], d[:, 1]))).astype(int)
    idx = np.repeat(np.arange(len(a)), pieces)
    step = np.arange(len(idx)) - np.repeat(np.cumsum(pieces) - pieces, pieces)
    start = a[idx] + (step / pieces[idx])[:, None] * d[idx]
    end = a[idx] + ((step + 1) / pieces[idx])[:, None] * d[idx]
    seg = end - start
    length2 = (seg * seg).sum(axis=1)[:, None]

    base = np.floor(np.minimum(start, end)) - 1.0
    cand = base[:, None, :] + _NEIGHBOURHOOD[None, :, :]
    rel = cand - start[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(length2 == 0, 0.0, np.clip((rel * seg[:, None, :]).sum(axis=-1) / length2, 0.0, 1.0))
    off = rel - t[..., None] * seg[:, None, :]
    hit = (off * off).sum(axis=-1) <= HALF_STROKE ** 2
    return cand[hit].astype(np.int64)


def rasterize(fig: Figure, size: int = DEFAULT_SIZE) -> np.ndarray:
    """Boolean ink mask. Figure coordinates are y-up with the origin at the
    panel centre; pixel centres sit on integer (column, row) positions."""
    ink = np.zeros((size, size), dtype=bool)
    c = (size - 1) / 2.0

    def to_px(p):
        return np.column_stack([c + p[:, 0], c - p[:, 1]])

    for stroke in fig.strokes:
        pts = to_px(stroke)
        if len(pts) == 1:
            pts = np.vstack([pts, pts])
        px = _stroke_pixels(pts)
        keep = (px >= 0).all(axis=1) & (px < size).all(axis=1)
        ink[px[keep, 1], px[keep, 0]] = True

    for x, y, r in fig.disks:
        px, py = c + x, c - y
        win = _window(px - r, px + r, py - r, py + r, size)
        if win is not None:
            sl, cols, rows = win
            ink[sl] |= (cols - px) ** 2 + (rows - py) ** 2 <= r * r

    for rings in fig.fills:
        pts = [to_px(r) for r in rings]
        allp = np.concatenate(pts)
        win = _window(allp[:, 0].min(), allp[:, 0].max(), allp[:, 1].min(), allp[:, 1].max(), size)
        if win is None:
            continue
        sl, cols, rows = win
        inside = np.zeros((rows.shape[0], cols.shape[1]), dtype=bool)
        for ring in pts:
            for a, b in zip(ring, np.roll(ring, -1, axis=0)):
                crosses = (a[1] > rows) != (b[1] > rows)
                with np.errstate(divide="ignore", invalid="ignore"):
                    xint = a[0] + (rows - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
                inside ^= crosses & (cols < xint)
        ink[sl] |= inside
    return _fill_pockets(ink)


def _fill_pockets(ink: np.ndarray) -> np.ndarray:
    """Ink tiny enclosed background specks left where two strokes meet at an
    acute angle; they would otherwise count as holes."""
    labels, n = ndimage.label(~ink)
    if n == 0:
        return ink
    sizes = np.bincount(labels.ravel())
    border = np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))
    small = sizes <= MAX_POCKET
    small[0] = False
    small[border] = False
    return ink | small[labels]


def to_gray(ink: np.ndarray) -> GrayRaster:
    return GrayRaster(np.where(ink, INK, PAPER).astype(np.uint8))


# --------------------------------------------------------------------------
# Randomness helpers (only Generator.random is used, for a stable stream)
# --------------------------------------------------------------------------


class Draw:
    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * float(self._rng.random())

    def index(self, n: int) -> int:
        return min(int(self._rng.random() * n), n - 1)

    def sign(self) -> float:
        return -1.0 if self._rng.random() < 0.5 else 1.0

    def choice(self, options):
        return options[self.index(len(options))]


def _ellipse(a: float, b: float, n: int = 96) -> np.ndarray:
    t = np.linspace(0.0, 2 * np.pi, n + 1)
    return np.column_stack([a * np.cos(t), b * np.sin(t)])


def _polygon(radius: float, n: int, draw: Draw) -> np.ndarray:
    step = 2 * np.pi / n
    angles = np.array([k * step + draw.uniform(-0.25, 0.25) * step for k in range(n)])
    radii = np.array([radius * draw.uniform(0.85, 1.0) for _ in range(n)])
    ring = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    return np.vstack([ring, ring[:1]])


def _resample(poly: np.ndarray, spacing: float = 0.5) -> np.ndarray:
    seg = np.hypot(*np.diff(poly, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.arange(0.0, s[-1], spacing)
    return np.column_stack([np.interp(t, s, poly[:, 0]), np.interp(t, s, poly[:, 1])])


def _open_curve(closed: np.ndarray, gap: float, draw: Draw) -> np.ndarray:
    """Cut the shortest run out of a smooth closed curve whose chord reaches ``gap``."""
    dense = _resample(closed)
    n = len(dense)
    start = draw.index(n)
    dense = np.roll(dense, -start, axis=0)
    for k in range(1, n):
        if np.hypot(*(dense[k] - dense[0])) >= gap:
            return dense[k:]
    raise ValueError("curve too small for the requested gap")


def _open_polygon(ring: np.ndarray, gap: float, draw: Draw, margin: float = 4.0) -> np.ndarray:
    """Cut ``gap`` out of the longest edge, at least ``margin`` from its corners.

    A cut next to an acute corner can leave the two loose ends touching.
    """
    lengths = np.hypot(*np.diff(ring, axis=0).T)
    k = int(np.argmax(lengths))
    length = float(lengths[k])
    if length < gap + 2 * margin:
        raise ValueError("polygon too small for the requested gap")
    a, b = ring[k], ring[k + 1]
    t0 = draw.uniform(margin, length - margin - gap) / length
    t1 = t0 + gap / length
    corners = np.roll(ring[:-1], -(k + 1), axis=0)  # b first, a last
    return np.vstack([a + t1 * (b - a), corners, a + t0 * (b - a)])


# --------------------------------------------------------------------------
# Concepts
# --------------------------------------------------------------------------


def _closure(draw: Draw, u: float):
    kind = draw.choice(["ellipse", "polygon"])
    if kind == "ellipse":
        a = draw.uniform(22, 30) * u
        curve = _ellipse(a, draw.uniform(0.55, 0.9) * a)
        opened = _open_curve(curve, CLOSURE_GAP * u, draw)
    else:
        curve = _polygon(draw.uniform(24, 30) * u, draw.choice([3, 4, 5, 6]), draw)
        opened = _open_polygon(curve, CLOSURE_GAP * u, draw)
    base = Figure(strokes=[curve])
    odd = Figure(strokes=[opened])
    return base, odd, {"kind": kind, "gap": CLOSURE_GAP * u,
                       "endpoints": [opened[0].tolist(), opened[-1].tolist()]}


def _alignment(draw: Draw, u: float):
    n = draw.choice([4, 5])
    spacing = draw.uniform(15, 18) * u
    xs = (np.arange(n) - (n - 1) / 2) * spacing
    rad = 3.0 * u
    k = 1 + draw.index(n - 2)
    offset = draw.sign() * draw.uniform(*ALIGNMENT_OFFSET) * u
    centres = [(float(x), 0.0) for x in xs]
    moved = list(centres)
    moved[k] = (centres[k][0], offset)
    base = Figure(disks=[(x, y, rad) for x, y in centres])
    odd = Figure(disks=[(x, y, rad) for x, y in moved])
    return base, odd, {"dots": n, "spacing": spacing, "moved": k, "offset": offset,
                       "centres": centres, "odd_centres": moved}


def _symmetric_outline(half_widths_right, half_widths_left, ys) -> np.ndarray:
    right = np.column_stack([half_widths_right, ys])
    left = np.column_stack([-np.asarray(half_widths_left), ys])[::-1]
    ring = np.vstack([right, left])
    return np.vstack([ring, ring[:1]])


def _vertical_symmetry(draw: Draw, u: float):
    stations = 5
    length = draw.uniform(27, 32) * u
    ys = np.linspace(length, -length, stations)
    widths = np.array([draw.uniform(1, 6)] + [draw.uniform(7, 15) for _ in range(stations - 2)]
                      + [draw.uniform(4, 10)]) * u
    k = 1 + draw.index(stations - 2)
    shift = draw.uniform(*SYMMETRY_SHIFT) * u
    # widen the chosen station on one side only (narrowing could cross the axis)
    odd_right = widths.copy()
    odd_right[k] += shift
    flip = draw.sign()
    base = Figure(strokes=[_symmetric_outline(widths, widths, ys)])
    odd_outline = _symmetric_outline(odd_right, widths, ys) * np.array([flip, 1.0])
    odd = Figure(strokes=[odd_outline])
    return base, odd, {"length": length, "widths": widths.tolist(), "station": k, "shift": shift}


def _circle_center(draw: Draw, u: float):
    frac = draw.uniform(*CENTER_OFFSET)
    direction = draw.uniform(0, 2 * np.pi)
    dot = 3.0 * u

    def figure(radius, offset):
        return Figure(strokes=[_ellipse(radius, radius, 120)],
                      disks=[(offset * math.cos(direction), offset * math.sin(direction), dot)])

    # radii differ per panel, so the builder hands back factories
    return figure, frac, {"offset_fraction": frac}


def _connectedness(draw: Draw, u: float):
    """Three dots chained by two connectors; the odd panel breaks one link."""
    rad = 5.0 * u
    corners = []
    for k in range(3):
        ang = math.radians(90 + 120 * k + draw.uniform(-12, 12))
        dist = draw.uniform(22, 28) * u
        corners.append(np.array([dist * math.cos(ang), dist * math.sin(ang)]))
    links = [_resample(np.array([corners[0], corners[1]]), 0.5),
             _resample(np.array([corners[1], corners[2]]), 0.5)]
    broken = draw.index(2)
    path = links[broken]
    mid = len(path) // 2
    gap_half = 0
    while np.hypot(*(path[mid + gap_half] - path[mid - gap_half])) < CONNECTOR_GAP * u:
        gap_half += 1
    disks = [(float(c[0]), float(c[1]), rad) for c in corners]
    base = Figure(strokes=links, disks=disks)
    odd_links = [links[1 - broken], path[: mid - gap_half + 1], path[mid + gap_half:]]
    odd = Figure(strokes=odd_links, disks=disks)
    return base, odd, {"corners": [c.tolist() for c in corners], "broken_link": broken,
                       "gap": CONNECTOR_GAP * u}


def _holes(draw: Draw, u: float):
    sides = draw.choice([4, 5, 6, 48])
    radius = draw.uniform(22, 27) * u
    outer = _polygon(radius, sides, draw)[:-1] if sides != 48 else _ellipse(radius, radius, 48)[:-1]
    hole_r = draw.uniform(6, 8) * u
    # inradius about the origin: distance to the nearest edge line
    a, b = outer, np.roll(outer, -1, axis=0)
    edge = b - a
    inradius = float((np.abs(edge[:, 0] * a[:, 1] - edge[:, 1] * a[:, 0]) / np.hypot(*edge.T)).min())
    reach = max(inradius - hole_r - 5 * u, 0.0)
    ang, dist = draw.uniform(0, 2 * np.pi), draw.uniform(0, reach)
    hole = _ellipse(hole_r, hole_r, 32)[:-1] + np.array([dist * math.cos(ang), dist * math.sin(ang)])
    base = Figure(fills=[[outer, hole]])
    odd = Figure(fills=[[outer]])
    return base, odd, {"sides": sides, "radius": radius, "hole_radius": hole_r}


def _chiral_shape(draw: Draw, u: float) -> Figure:
    h = draw.uniform(22, 28) * u
    top = draw.uniform(18, 26) * u
    mid_y = draw.uniform(-4, 8) * u
    mid = draw.uniform(10, 16) * u
    bar = np.array([[0.0, -h], [0.0, h], [top, h]])
    arm = np.array([[0.0, mid_y], [mid, mid_y]])
    return Figure(strokes=[bar, arm]).centred()


def _chirality(draw: Draw, u: float):
    base = _chiral_shape(draw, u)
    return base, base.mirrored(), {}


def _parallelism(draw: Draw, u: float):
    length = draw.uniform(50, 62) * u
    sep = draw.uniform(14, 24) * u
    tilt = math.radians(draw.sign() * draw.uniform(*PARALLEL_TILT))
    seg = np.array([[-length / 2, 0.0], [length / 2, 0.0]])
    upper = seg + np.array([0.0, sep / 2])
    c, s = math.cos(tilt), math.sin(tilt)
    tilted = seg @ np.array([[c, -s], [s, c]]).T + np.array([0.0, sep / 2])
    base = Figure(strokes=[seg - np.array([0.0, sep / 2]), upper])
    odd = Figure(strokes=[seg - np.array([0.0, sep / 2]), tilted])
    return base, odd, {"length": length, "separation": sep, "tilt_deg": math.degrees(tilt)}


def _homothecy(draw: Draw, u: float):
    tri = np.array([[draw.uniform(-4, 4), draw.uniform(14, 20)],
                    [draw.uniform(-18, -12), draw.uniform(-14, -8)],
                    [draw.uniform(12, 18), draw.uniform(-14, -8)]]) * u
    tri = np.vstack([tri, tri[:1]])
    k = draw.uniform(0.4, 0.55)
    big = tri + np.array([-10.0, 6.0]) * u
    small = k * tri + np.array([22.0, -18.0]) * u
    stretched = (tri * np.array([k * HOMOTHECY_STRETCH, k / HOMOTHECY_STRETCH])
                 + np.array([22.0, -18.0]) * u)
    # solid triangles: thin outlines pinch off stray holes in acute corners
    base = Figure(fills=[[big[:-1]], [small[:-1]]]).centred()
    odd = Figure(fills=[[big[:-1]], [stretched[:-1]]]).centred()
    return base, odd, {"ratio": k, "stretch": HOMOTHECY_STRETCH}


CONCEPTS = (
    "closure", "alignment", "vertical_symmetry", "circle_center", "connectedness",
    "holes", "parallelism", "chirality_vertical", "chirality_oblique", "homothecy",
)

_BUILDERS = {
    "closure": _closure,
    "alignment": _alignment,
    "vertical_symmetry": _vertical_symmetry,
    "connectedness": _connectedness,
    "holes": _holes,
    "parallelism": _parallelism,
    "chirality_vertical": _chirality,
    "chirality_oblique": _chirality,
    "homothecy": _homothecy,
}


# --------------------------------------------------------------------------
# Problems
# --------------------------------------------------------------------------


@dataclass(eq=False)
class GeneratedProblem:
    concept: str
    panels: list[GrayRaster]
    odd_index: int
    seed: int
    params: dict

    @property
    def problem_id(self) -> str:
        return f"{self.concept}-{self.seed}"

    def manifest(self) -> dict:
        return {"concept": self.concept, "seed": self.seed, "odd_index": self.odd_index, "params": self.params}


def _angle_gap(a: float, b: float) -> float:
    d = abs(a - b) % (2 * np.pi)
    return min(d, 2 * np.pi - d)


def _permutation(draw: Draw, n: int) -> list[int]:
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = draw.index(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def _stratified(draw: Draw, lo: float, hi: float) -> list[float]:
    """Six values on evenly spaced, jittered levels across ``[lo, hi]`` in random order.

    Six evenly spaced values have a largest standard score of about 1.46, so
    a nuisance drawn this way never singles out one panel on its own.
    """
    step = (hi - lo) / N_PANELS
    return [lo + step * (level + 0.5 + draw.uniform(-0.25, 0.25)) for level in _permutation(draw, N_PANELS)]


def _angles(concept: str, draw: Draw) -> list[float]:
    if concept == "chirality_vertical":
        return [0.0] * N_PANELS
    if concept == "chirality_oblique":
        # keep clear of the image axes
        return [draw.index(4) * np.pi / 2 + math.radians(draw.uniform(15, 75)) for _ in range(N_PANELS)]
    # 60-degree strata: each orientation modulo 90 degrees is shared by two panels
    base = draw.uniform(0, 2 * np.pi)
    return [base + level * np.pi / 3 + math.radians(draw.uniform(-ANGLE_JITTER, ANGLE_JITTER))
            for level in _permutation(draw, N_PANELS)]


def _poses(concept: str, draw: Draw, radius: float, size: int, scale_range) -> list[dict]:
    """Six nuisance poses, pairwise apart in rotation or in translation."""
    angles = _angles(concept, draw)
    scales = _stratified(draw, *scale_range)
    poses: list[dict] = []
    for angle, scale in zip(angles, scales):
        room = max(size / 2.0 - MARGIN - radius * scale, 0.0)
        for _ in range(200):
            # whole-pixel shifts: translation alone never changes the rasterized shape
            shift = (float(round(draw.uniform(-room, room))), float(round(draw.uniform(-room, room))))
            if all(_angle_gap(angle, p["angle"]) >= MIN_ROTATION_GAP
                   or math.hypot(shift[0] - p["shift"][0], shift[1] - p["shift"][1]) >= MIN_SHIFT_GAP
                   for p in poses):
                break
        poses.append({"angle": angle, "scale": scale, "shift": shift})
    return poses


def generate(concept: str, seed: int, size: int = DEFAULT_SIZE) -> GeneratedProblem:
    """Build one problem; ``(concept, seed, size)`` fixes every pixel."""
    if concept not in CONCEPTS:
        raise UnknownConcept(f"unknown concept {concept!r}; choose from {', '.join(CONCEPTS)}")
    draw = Draw(seed)
    odd_index = draw.index(N_PANELS)
    u = size / DEFAULT_SIZE

    if concept == "circle_center":
        factory, frac, params = _circle_center(draw, u)
        radii = [r * u for r in _stratified(draw, 22, 34)]
        figures = [factory(r, frac * r if k == odd_index else 0.0) for k, r in enumerate(radii)]
        poses = _poses(concept, draw, max(radii) + HALF_STROKE, size, (1.0, 1.0))
        params["radii"] = radii
    else:
        base, odd, params = _BUILDERS[concept](draw, u)
        figures = [odd if k == odd_index else base for k in range(N_PANELS)]
        scale_range = (1.0, 1.0) if concept.startswith("chirality") else SCALE_RANGE
        poses = _poses(concept, draw, max(base.radius(), odd.radius()), size, scale_range)

    panels = []
    for fig, pose in zip(figures, poses):
        panels.append(to_gray(rasterize(fig.placed(pose["angle"], pose["scale"], pose["shift"]), size)))
    params = dict(params, poses=poses, size=size)
    return GeneratedProblem(concept, panels, odd_index, seed, _plain(params))


def generate_suite(concept: str, n: int, base_seed: int, size: int = DEFAULT_SIZE) -> list[GeneratedProblem]:
    if n < 1:
        raise ValueError(f"suite size must be at least 1, got {n}")
    return [generate(concept, base_seed + k, size) for k in range(n)]


def _plain(obj):
    """JSON-friendly copy (numpy scalars/arrays to Python)."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
