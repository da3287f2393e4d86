"""Minimal SVG writers for heatmaps with line and marker overlays."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

# viridis-like anchor colours, interpolated linearly
_RAMP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)


def colour(v: float) -> str:
    """Map v in [0, 1] to a hex colour."""
    v = min(max(float(v), 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(v), len(_RAMP) - 2)
    rgb = _RAMP[i] + (v - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def _scale(values: np.ndarray, log: bool) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    finite = np.isfinite(v)
    if log:
        top = np.nanmax(np.where(finite, v, np.nan)) if finite.any() else 1.0
        floor = top * 1e-8 if top > 0 else 1e-300
        v = np.log10(np.maximum(v, floor))
        lo, hi = math.log10(floor), math.log10(top) if top > 0 else 0.0
    else:
        lo, hi = np.nanmin(v), np.nanmax(v)
    span = hi - lo if hi > lo else 1.0
    return np.where(finite, (v - lo) / span, 0.0)


def heatmap(values: np.ndarray, extent, title: str, xlabel: str, ylabel: str, log: bool = True,
            hlines=(), markers=(), size: int = 480, margin: int = 60) -> str:
    """Render ``values`` (rows = y from bottom to top, columns = x) as rects.

    ``extent`` is (x0, x1, y0, y1). ``hlines`` holds (y, label) pairs drawn as
    one ``<g class="overlay">`` group each; ``markers`` holds (x, y, label).
    """
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    x0, x1, y0, y1 = extent
    W = size + 2 * margin
    cw, ch = size / nx, size / ny
    level = _scale(values, log)

    def px(x):
        return margin + (x - x0) / (x1 - x0) * size

    def py(y):
        return margin + size - (y - y0) / (y1 - y0) * size

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{W}" viewBox="0 0 {W} {W}">',
           f'<text x="{W / 2:.1f}" y="{margin / 2:.1f}" text-anchor="middle" font-size="14">{title}</text>',
           '<g class="heatmap" shape-rendering="crispEdges">']
    for j in range(ny):
        for i in range(nx):
            out.append(f'<rect x="{margin + i * cw:.2f}" y="{margin + size - (j + 1) * ch:.2f}" '
                       f'width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" fill="{colour(level[j, i])}"/>')
    out.append("</g>")
    for y, label in hlines:
        out.append(f'<g class="overlay" data-label="{label}">')
        for yy in (y, -y) if y0 < 0 else (y,):
            if y0 <= yy <= y1:
                out.append(f'<line x1="{margin}" x2="{margin + size}" y1="{py(yy):.2f}" y2="{py(yy):.2f}" '
                           'stroke="white" stroke-width="1" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{margin + size + 4}" y="{py(y):.2f}" font-size="10">{label}</text>')
        out.append("</g>")
    for x, y, label in markers:
        out.append(f'<g class="marker"><circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="5" fill="none" '
                   f'stroke="red" stroke-width="2"/><text x="{px(x) + 7:.2f}" y="{py(y) - 7:.2f}" '
                   f'font-size="11" fill="red">{label}</text></g>')
    out.append(f'<rect x="{margin}" y="{margin}" width="{size}" height="{size}" fill="none" stroke="black"/>')
    out.append(f'<text x="{W / 2:.1f}" y="{W - margin / 3:.1f}" text-anchor="middle" font-size="12">{xlabel}</text>')
    out.append(f'<text x="{margin / 3:.1f}" y="{W / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 {margin / 3:.1f} {W / 2:.1f})">{ylabel}</text>')
    for frac in (0.0, 0.5, 1.0):
        out.append(f'<text x="{px(x0 + frac * (x1 - x0)):.1f}" y="{margin + size + 14}" text-anchor="middle" '
                   f'font-size="10">{x0 + frac * (x1 - x0):.3g}</text>')
        out.append(f'<text x="{margin - 4}" y="{py(y0 + frac * (y1 - y0)) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{y0 + frac * (y1 - y0):.3g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bin_scattered(x, y, values, weights, extent, nx: int, ny: int) -> np.ndarray:
    """Weighted average of scattered samples on an nx-by-ny raster (NaN where empty)."""
    x0, x1, y0, y1 = extent
    ix = np.clip(((np.asarray(x) - x0) / (x1 - x0) * nx).astype(int), 0, nx - 1)
    iy = np.clip(((np.asarray(y) - y0) / (y1 - y0) * ny).astype(int), 0, ny - 1)
    num = np.zeros((ny, nx))
    den = np.zeros((ny, nx))
    np.add.at(num, (iy, ix), np.asarray(weights) * np.asarray(values))
    np.add.at(den, (iy, ix), np.asarray(weights))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, np.nan)


def write(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path
