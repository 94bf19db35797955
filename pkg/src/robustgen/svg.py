"""Minimal SVG line plots built from CSV text."""

from __future__ import annotations

import csv
import io
import math
from typing import Dict, List, Sequence
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
W, H = 520, 360
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50


def _ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def line_plot(x: Sequence[float], series: Dict[str, Sequence[float]], title: str = "",
              xlabel: str = "", ylabel: str = "", log10_y: bool = False) -> str:
    """Polylines for each series.  With ``log10_y`` the y values are already
    base-10 logarithms and the axis is labelled with powers of ten."""
    ys = [v for vals in series.values() for v in vals if math.isfinite(v)]
    if not x or not ys:
        raise ValueError("nothing to plot")
    x0, x1 = min(x), max(x)
    y0, y1 = min(ys), max(ys)
    if log10_y:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{TOP + ph}" x2="{px(t):.2f}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{TOP + ph + 16}" text-anchor="middle">{t:g}</text>')
    yt = [float(k) for k in range(int(y0), int(y1) + 1)] if log10_y else _ticks(y0, y1)
    if log10_y and len(yt) > 8:
        step = math.ceil(len(yt) / 8)
        yt = yt[::step]
    for t in yt:
        label = f"1e{int(t)}" if log10_y else f"{t:g}"
        out.append(f'<line x1="{LEFT - 4}" y1="{py(t):.2f}" x2="{LEFT}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{label}</text>')
    for i, (name, vals) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, vals) if math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        for a, b in zip(x, vals):
            if math.isfinite(b):
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{color}"/>')
        ly = TOP + 12 + 14 * i
        out.append(f'<line x1="{LEFT + 10}" y1="{ly - 4}" x2="{LEFT + 28}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + 32}" y="{ly}">{escape(name)}</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="{TOP - 10}" text-anchor="middle" font-size="13">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{LEFT + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{TOP + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {TOP + ph / 2})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cover_sweep_svg(csv_text: str, title: str = "") -> str:
    """K and mean |T_S| against d, log scale, read back from the sweep CSV."""
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    d = [float(r["d"]) for r in rows]
    ln10 = math.log(10.0)
    k = [float(r["ln_K"]) / ln10 for r in rows]
    t = [math.log10(float(r["mean_t_size"])) if float(r["mean_t_size"]) > 0 else -math.inf
         for r in rows]
    return line_plot(d, {"K": k, "mean |T_S|": t}, title=title, xlabel="d",
                     ylabel="count (log scale)", log10_y=True)
