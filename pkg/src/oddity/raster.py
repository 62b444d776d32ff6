"""Image loading, caption blanking, grid segmentation and binarization.

Rasters are thin frozen wrappers over numpy arrays indexed ``[row, col]``.
Portable any-map files (P2/P3/P5/P6) are parsed here directly; PNG goes
through Pillow when it is installed.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CorruptImage, GridNotDetected, RegionOutOfBounds, UnsupportedFormat

DEFAULT_THRESHOLD = 128
POLARITIES = ("ink", "bright")
MIN_GUTTER = 3

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True, eq=False)
class GrayRaster:
    """Grid of 8-bit intensities, shape ``(height, width)``."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.uint8, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"raster must be a non-empty 2-D grid, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GrayRaster):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))


@dataclass(frozen=True, eq=False)
class BinaryRaster:
    """Boolean grid, ``True`` marks foreground."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.array(self.bits, dtype=bool, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"binary raster must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryRaster):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.bits.shape, self.bits.tobytes()))


class Region(NamedTuple):
    """Axis-aligned pixel rectangle; ``x``/``y`` are the top-left column/row."""

    x: int
    y: int
    w: int
    h: int


# --------------------------------------------------------------------------
# Loading and saving
# --------------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(payload: bytes, count: int) -> tuple[list[bytes], int]:
    tokens = []
    pos = 0
    for _ in range(count):
        m = _TOKEN.match(payload, pos)
        if m is None:
            raise CorruptImage("truncated header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def _to_uint8(values: np.ndarray, maxval: int) -> np.ndarray:
    if maxval == 255:
        return values.astype(np.uint8)
    return np.rint(values.astype(np.float64) * 255.0 / maxval).astype(np.uint8)


def _channel_mean(rgb: np.ndarray) -> np.ndarray:
    # integer luminance average, rounded half up
    total = rgb.astype(np.int64).sum(axis=-1)
    return ((2 * total + 3) // 6).astype(np.uint8)


def parse_netpbm(payload: bytes) -> GrayRaster:
    magic = payload[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise UnsupportedFormat(f"unknown magic {magic!r}")
    channels = 3 if magic in (b"P3", b"P6") else 1
    try:
        tokens, pos = _header_tokens(payload, 4)
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise CorruptImage(f"bad header: {exc}") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise CorruptImage(f"bad header values {width}x{height} max {maxval}")
    n = width * height * channels

    if magic in (b"P2", b"P3"):
        body = re.sub(rb"#[^\n]*", b"", payload[pos:]).split()
        if len(body) < n:
            raise CorruptImage(f"expected {n} samples, found {len(body)}")
        try:
            values = np.array([int(v) for v in body[:n]], dtype=np.int64)
        except ValueError:
            raise CorruptImage("non-integer sample") from None
    else:
        # exactly one whitespace byte separates maxval from the raster
        raw = payload[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        if len(raw) < n * dtype.itemsize:
            raise CorruptImage(f"payload truncated: need {n * dtype.itemsize} bytes, got {len(raw)}")
        values = np.frombuffer(raw, dtype=dtype, count=n).astype(np.int64)

    if values.max(initial=0) > maxval:
        raise CorruptImage("sample exceeds maxval")
    values = _to_uint8(values, maxval)
    if channels == 3:
        return GrayRaster(_channel_mean(values.reshape(height, width, 3)))
    return GrayRaster(values.reshape(height, width))


def _load_png(path: str) -> GrayRaster:
    try:
        from PIL import Image
    except ImportError:
        raise UnsupportedFormat("PNG support requires Pillow (install the 'png' extra)") from None
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ("L", "1", "P", "I", "I;16"):
                arr = np.asarray(img.convert("L"))
            else:
                arr = _channel_mean(np.asarray(img.convert("RGB")))
    except OSError as exc:
        raise CorruptImage(str(exc)) from None
    return GrayRaster(arr)


def load_grayscale(path) -> GrayRaster:
    """Read a PGM/PPM (ASCII or binary) or PNG file into a GrayRaster.

    Colour inputs are reduced to the per-pixel channel mean. Raises
    ``FileNotFoundError``, :class:`UnsupportedFormat` or :class:`CorruptImage`.
    """
    path = os.fspath(path)
    with open(path, "rb") as fh:
        payload = fh.read()
    if payload.startswith(_PNG_MAGIC):
        return _load_png(path)
    return parse_netpbm(payload)


def save_pgm(raster: GrayRaster, path) -> None:
    header = f"P5\n{raster.width} {raster.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(raster.data).tobytes())


# --------------------------------------------------------------------------
# Caption blanking
# --------------------------------------------------------------------------


def panel_caption_region(panel_width: int, panel_height: int) -> Region:
    """Top-left 15% x 10% of a panel, where captions usually sit."""
    return Region(0, 0, int(round(panel_width * 0.15)), int(round(panel_height * 0.10)))


def default_caption_region(raster: GrayRaster) -> Region:
    """Caption region of the first panel of a sheet (a third by a half of it)."""
    return panel_caption_region(raster.width // 3, raster.height // 2)


def crop_caption(raster: GrayRaster, region: Region, background: int = 0) -> GrayRaster:
    """Blank ``region`` to ``background``; the raster keeps its dimensions."""
    x, y, w, h = region
    if w < 0 or h < 0 or x < 0 or y < 0 or x + w > raster.width or y + h > raster.height:
        raise RegionOutOfBounds(f"{region} outside {raster.width}x{raster.height} raster")
    if w == 0 or h == 0:
        return raster
    data = raster.data.copy()
    data[y:y + h, x:x + w] = background
    return GrayRaster(data)


# --------------------------------------------------------------------------
# Binarization
# --------------------------------------------------------------------------


def foreground_mask(data: np.ndarray, threshold: int = DEFAULT_THRESHOLD, polarity: str = "ink") -> np.ndarray:
    if polarity not in POLARITIES:
        raise ValueError(f"polarity must be one of {POLARITIES}, got {polarity!r}")
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must lie in [0, 255], got {threshold}")
    values = data.astype(np.int16)
    if polarity == "ink":
        values = 255 - values
    return values > threshold


def binarize(raster: GrayRaster, threshold: int = DEFAULT_THRESHOLD, polarity: str = "ink") -> BinaryRaster:
    """Foreground where the (polarity-adjusted) intensity is strictly above ``threshold``.

    ``polarity="ink"`` treats dark strokes on light paper as foreground by
    inverting intensities first; ``"bright"`` uses them as-is.
    """
    return BinaryRaster(foreground_mask(raster.data, threshold, polarity))


def background_value(polarity: str) -> int:
    return 255 if polarity == "ink" else 0


# --------------------------------------------------------------------------
# Grid segmentation
# --------------------------------------------------------------------------


def _interior_gutters(blank: np.ndarray, min_run: int) -> list[tuple[int, int]]:
    """Maximal runs of True of length >= min_run that touch neither end."""
    runs = []
    n = len(blank)
    i = 0
    while i < n:
        if not blank[i]:
            i += 1
            continue
        j = i
        while j < n and blank[j]:
            j += 1
        if j - i >= min_run and i > 0 and j < n:
            runs.append((i, j))
        i = j
    return runs


def _bands(length: int, gutters: list[tuple[int, int]]) -> list[tuple[int, int]]:
    edges = [0]
    for start, stop in gutters:
        edges.extend([start, stop])
    edges.append(length)
    return [(edges[k], edges[k + 1]) for k in range(0, len(edges), 2)]


def _even_bands(length: int, parts: int) -> list[tuple[int, int]]:
    cuts = [round(length * k / parts) for k in range(parts + 1)]
    return [(cuts[k], cuts[k + 1]) for k in range(parts)]


def segment_grid(
    raster: GrayRaster,
    threshold: int = DEFAULT_THRESHOLD,
    polarity: str = "ink",
    fallback: bool = True,
    min_gutter: int = MIN_GUTTER,
) -> list[GrayRaster]:
    """Split a 3-column by 2-row problem sheet into six panels, row-major.

    Gutters are maximal interior runs of at least ``min_gutter`` blank
    columns/rows and are dropped from the output. When detection does not
    find exactly two column gutters and one row gutter the sheet is cut into
    exact thirds and halves, unless ``fallback`` is off.
    """
    fg = foreground_mask(raster.data, threshold, polarity)
    col_gutters = _interior_gutters(~fg.any(axis=0), min_gutter)
    row_gutters = _interior_gutters(~fg.any(axis=1), min_gutter)

    if len(col_gutters) == 2 and len(row_gutters) == 1:
        cols = _bands(raster.width, col_gutters)
        rows = _bands(raster.height, row_gutters)
    elif fallback:
        if raster.width < 3 or raster.height < 2:
            raise GridNotDetected(f"{raster.width}x{raster.height} raster too small for a 3x2 grid")
        cols = _even_bands(raster.width, 3)
        rows = _even_bands(raster.height, 2)
    else:
        raise GridNotDetected(
            f"found {len(col_gutters)} column gutters and {len(row_gutters)} row gutters, need 2 and 1"
        )
    return [GrayRaster(raster.data[r0:r1, c0:c1]) for r0, r1 in rows for c0, c1 in cols]


def compose_sheet(panels: list[GrayRaster], gutter: int = 10, background: int = 255) -> GrayRaster:
    """Lay six equal-size panels out on a 3x2 sheet with blank gutters."""
    if len(panels) != 6:
        raise ValueError(f"need 6 panels, got {len(panels)}")
    h, w = panels[0].height, panels[0].width
    if any(p.height != h or p.width != w for p in panels):
        raise ValueError("panels must share one size")
    sheet = np.full((2 * h + gutter, 3 * w + 2 * gutter), background, dtype=np.uint8)
    for k, panel in enumerate(panels):
        r, c = divmod(k, 3)
        y, x = r * (h + gutter), c * (w + gutter)
        sheet[y:y + h, x:x + w] = panel.data
    return GrayRaster(sheet)
