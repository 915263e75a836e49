"""Minimal static SVG line charts with optional error bars."""

from __future__ import annotations

from typing import Dict, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.floor(lo / step) * step
    return np.arange(start, hi + step * 0.5, step)


def _label(v) -> str:
    return f"{v:.4g}"


def line_chart(
    x: Sequence[float],
    series: Dict[str, Sequence[float]],
    errors: Optional[Dict[str, Sequence[float]]] = None,
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 640,
    height: int = 420,
) -> str:
    """Return an SVG document; one polyline per entry of ``series``."""
    x = np.asarray(x, dtype=float)
    errors = errors or {}
    ml, mr, mt, mb = 70, 150, 40, 55
    pw, ph = width - ml - mr, height - mt - mb

    lows, highs = [], []
    for name, ys in series.items():
        ys = np.asarray(ys, dtype=float)
        e = np.asarray(errors.get(name, np.zeros_like(ys)), dtype=float)
        lows.append(np.nanmin(ys - e))
        highs.append(np.nanmax(ys + e))
    ylo, yhi = float(min(lows)), float(max(highs))
    yt = _ticks(ylo, yhi)
    ylo, yhi = float(yt[0]), float(yt[-1])
    xlo, xhi = float(x.min()), float(x.max())
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5

    def px(v):
        return ml + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        return mt + (1.0 - (v - ylo) / (yhi - ylo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for t in yt:
        y = py(t)
        out.append(f'<line x1="{ml}" y1="{y:.1f}" x2="{ml + pw}" y2="{y:.1f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{ml - 6}" y="{y + 4:.1f}" text-anchor="end">{_label(t)}</text>')
    for t in x:
        xx = px(t)
        out.append(f'<line x1="{xx:.1f}" y1="{mt + ph}" x2="{xx:.1f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{xx:.1f}" y="{mt + ph + 19}" text-anchor="middle">{_label(t)}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    if xlabel:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cy = mt + ph / 2
        out.append(
            f'<text x="18" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 18 {cy:.1f})">{escape(ylabel)}</text>'
        )

    for i, (name, ys) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        ys = np.asarray(ys, dtype=float)
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, ys) if np.isfinite(b))
        out.append(f'<g class="series" data-name="{escape(name)}">')
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        if name in errors:
            for a, b, e in zip(x, ys, np.asarray(errors[name], dtype=float)):
                if not (np.isfinite(b) and np.isfinite(e)) or e <= 0:
                    continue
                xx, y0, y1 = px(a), py(b - e), py(b + e)
                out.append(
                    f'<path class="errorbar" d="M{xx:.1f},{y0:.1f}V{y1:.1f}M{xx - 4:.1f},{y0:.1f}'
                    f'h8M{xx - 4:.1f},{y1:.1f}h8" stroke="{color}" fill="none"/>'
                )
        for a, b in zip(x, ys):
            if np.isfinite(b):
                out.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="3.5" fill="{color}"/>')
        out.append("</g>")
        ly = mt + 14 + 20 * i
        lx = ml + pw + 14
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
