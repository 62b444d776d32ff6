"""Debug dumps of normalized point clouds (SVG scatter and CSV)."""

from __future__ import annotations

import os

import numpy as np

from .pointset import PointCloud


def cloud_csv(cloud: PointCloud) -> str:
    lines = ["x,y"] + [f"{x:g},{y:g}" for x, y in cloud.points.tolist()]
    return "\n".join(lines) + "\n"


def cloud_svg(cloud: PointCloud, title: str = "", size: int = 240, dot: float = 1.2) -> str:
    """Scatter plot with the principal axes drawn through the origin."""
    pts = cloud.points
    reach = float(np.abs(pts).max()) if len(pts) else 1.0
    reach = max(reach, 1.0) * 1.05
    half = size / 2.0
    k = half / reach

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="0" y1="{half}" x2="{size}" y2="{half}" stroke="#bbb" stroke-width="0.5"/>',
        f'<line x1="{half}" y1="0" x2="{half}" y2="{size}" stroke="#bbb" stroke-width="0.5"/>',
    ]
    if title:
        parts.append(f'<title>{title}</title>')
    for x, y in pts.tolist():
        parts.append(f'<circle cx="{half + k * x:.2f}" cy="{half - k * y:.2f}" r="{dot}" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def dump_clouds(clouds, out_dir: str, prefix: str = "panel") -> list[str]:
    """Write ``panel1.svg``/``panel1.csv`` ... for each cloud; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for k, cloud in enumerate(clouds, 1):
        for ext, body in (("svg", cloud_svg(cloud, f"{prefix} {k}")), ("csv", cloud_csv(cloud))):
            path = os.path.join(out_dir, f"{prefix}{k}.{ext}")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(body)
            written.append(path)
    return written
