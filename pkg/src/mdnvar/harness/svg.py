"""Minimal static SVG line charts (no plotting dependency)."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _polyline(xs, ys, color: str, width: float) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return (f'<polyline fill="none" stroke="{color}" stroke-width="{width}" '
            f'points="{pts}"/>')


def line_chart(dates, losses, series: dict, title: str = "",
               width: int = 960, height: int = 400) -> str:
    """Losses as a thin grey line, each VaR series as a coloured line, shared y axis."""
    n = len(dates)
    if n < 2:
        raise ValueError("a line chart needs at least two points")
    left, right, top, bottom = 60, 150, 30, 40
    pw, ph = width - left - right, height - top - bottom
    all_y = np.concatenate([np.asarray(losses, float), *(np.asarray(v, float) for v in series.values())])
    lo, hi = float(all_y.min()), float(all_y.max())
    if hi == lo:
        hi = lo + 1.0
    xs = left + pw * np.arange(n) / (n - 1)

    def ymap(v):
        return top + ph * (hi - np.asarray(v, float)) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="{top - 10}" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        y = float(ymap(v))
        parts.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="#444"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4:.2f}" font-family="sans-serif" font-size="10" '
                     f'text-anchor="end">{v:.3f}</text>')
    for i in (0, n // 2, n - 1):
        parts.append(f'<text x="{xs[i]:.2f}" y="{height - bottom + 16}" font-family="sans-serif" '
                     f'font-size="10" text-anchor="middle">{dates[i].isoformat()}</text>')
    parts.append(_polyline(xs, ymap(losses), "#999999", 0.8))
    for j, (name, values) in enumerate(series.items()):
        color = PALETTE[j % len(PALETTE)]
        parts.append(_polyline(xs, ymap(values), color, 1.4))
        ly = top + 16 * (j + 1)
        parts.append(f'<line x1="{width - right + 10}" y1="{ly - 4}" x2="{width - right + 30}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{width - right + 36}" y="{ly}" font-family="sans-serif" '
                     f'font-size="11">{escape(name)}</text>')
    ly = top + 16 * (len(series) + 1)
    parts.append(f'<line x1="{width - right + 10}" y1="{ly - 4}" x2="{width - right + 30}" '
                 f'y2="{ly - 4}" stroke="#999999" stroke-width="2"/>')
    parts.append(f'<text x="{width - right + 36}" y="{ly}" font-family="sans-serif" '
                 f'font-size="11">loss</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
