"""Dependency-free log-log line plot rendered as SVG text."""
from __future__ import annotations

import math

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def loglog_svg(series: dict, xlabel: str = "", ylabel: str = "", width: int = 640, height: int = 420) -> str:
    """Render ``{label: (xs, ys)}`` on log-log axes. Non-positive points are dropped."""
    left, right, top, bottom = 70, 110, 20, 50
    pts = {}
    for label, (xs, ys) in series.items():
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        keep = (xs > 0) & (ys > 0)
        if keep.any():
            pts[label] = (np.log10(xs[keep]), np.log10(ys[keep]))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if not pts:
        out.append("</svg>")
        return "\n".join(out) + "\n"
    x0 = math.floor(min(p[0].min() for p in pts.values()))
    x1 = math.ceil(max(p[0].max() for p in pts.values()))
    y0 = math.floor(min(p[1].min() for p in pts.values()))
    y1 = math.ceil(max(p[1].max() for p in pts.values()))
    x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
    pw, ph = width - left - right, height - top - bottom

    def px(lx):
        return left + (lx - x0) / (x1 - x0) * pw

    def py(ly):
        return top + (y1 - ly) / (y1 - y0) * ph

    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for e in range(x0, x1 + 1):
        out.append(f'<text x="{px(e):.1f}" y="{top + ph + 18}" text-anchor="middle">1e{e}</text>')
    for e in range(y0, y1 + 1):
        out.append(f'<text x="{left - 6}" y="{py(e) + 4:.1f}" text-anchor="end">1e{e}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{ylabel}</text>')
    for i, (label, (lx, ly)) in enumerate(pts.items()):
        color = COLORS[i % len(COLORS)]
        # thin long series to keep files small
        step = max(1, lx.size // 400)
        coords = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(lx[::step], ly[::step]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{left + pw + 8}" y="{top + 16 + 16 * i}" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
