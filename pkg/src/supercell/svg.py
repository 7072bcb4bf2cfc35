"""Minimal SVG 1.1 line/scatter charts with optional log10 axes, no plotting dependency."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]
MARKERS = ["circle", "square", "diamond", "triangle"]


@dataclass
class Series:
    label: str
    xs: Sequence[float]
    ys: Sequence[float]
    style: str = "line"  # "line", "markers" or "both"


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for f in (1, 2, 2.5, 5, 10):
        if f * mag >= raw:
            return f * mag
    return 10 * mag


def _linear_ticks(lo: float, hi: float):
    step = _nice_step(hi - lo)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:.4g}"


def _marker(shape: str, x: float, y: float, color: str) -> str:
    r = 3.5
    if shape == "square":
        return f'<rect x="{x - r:.2f}" y="{y - r:.2f}" width="{2 * r:.2f}" height="{2 * r:.2f}" fill="{color}"/>'
    if shape == "diamond":
        pts = f"{x:.2f},{y - r - 1:.2f} {x + r + 1:.2f},{y:.2f} {x:.2f},{y + r + 1:.2f} {x - r - 1:.2f},{y:.2f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    if shape == "triangle":
        pts = f"{x:.2f},{y - r - 1:.2f} {x + r + 1:.2f},{y + r:.2f} {x - r - 1:.2f},{y + r:.2f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{color}"/>'


def render_chart(series: Sequence[Series], title: str, xlabel: str, ylabel: str,
                 xlog: bool = False, ylog: bool = False, width: int = 760, height: int = 480) -> str:
    """Render series to an SVG document string.

    Points that are non-finite, or non-positive on a log axis, are skipped.
    Every series appears in the legend even when none of its points is drawable.
    """
    def tx(v):
        return math.log10(v) if xlog else v

    def ty(v):
        return math.log10(v) if ylog else v

    def usable(x, y):
        if not (math.isfinite(x) and math.isfinite(y)):
            return False
        return not ((xlog and x <= 0) or (ylog and y <= 0))

    pts = [[(tx(x), ty(y)) for x, y in zip(s.xs, s.ys) if usable(x, y)] for s in series]
    flat = [p for ps in pts for p in ps]
    if flat:
        x0, x1 = min(p[0] for p in flat), max(p[0] for p in flat)
        y0, y1 = min(p[1] for p in flat), max(p[1] for p in flat)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    padx, pady = 0.05 * (x1 - x0), 0.08 * (y1 - y0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady

    left, right, top, bottom = 80, width - 190, 50, height - 60
    pw, ph = right - left, bottom - top

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return bottom - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{(left + right) / 2:.1f}" y="28" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{_escape(title)}</text>',
    ]

    def axis_ticks(lo, hi, log):
        if log:
            return [float(d) for d in range(math.ceil(lo), math.floor(hi) + 1)] or _linear_ticks(lo, hi)
        return _linear_ticks(lo, hi)

    for v in axis_ticks(x0, x1, xlog):
        x = px(v)
        label = f"1e{int(v)}" if xlog and float(v).is_integer() else _fmt_tick(10 ** v if xlog else v)
        out.append(f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{bottom}" stroke="#e0e0e0" stroke-width="1"/>')
        out.append(f'<text x="{x:.2f}" y="{bottom + 18}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')
    for v in axis_ticks(y0, y1, ylog):
        y = py(v)
        label = f"1e{int(v)}" if ylog and float(v).is_integer() else _fmt_tick(10 ** v if ylog else v)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{right}" y2="{y:.2f}" stroke="#e0e0e0" stroke-width="1"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')

    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000000" '
               f'stroke-width="1"/>')
    out.append(f'<text x="{(left + right) / 2:.1f}" y="{height - 18}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{_escape(xlabel)}</text>')
    out.append(f'<text x="20" y="{(top + bottom) / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 20 {(top + bottom) / 2:.1f})">{_escape(ylabel)}</text>')

    for i, (s, ps) in enumerate(zip(series, pts)):
        color = COLORS[i % len(COLORS)]
        shape = MARKERS[i % len(MARKERS)]
        out.append(f'<g id="series-{i}">')
        if s.style in ("line", "both") and len(ps) > 1:
            poly = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in ps)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{poly}"/>')
        if s.style in ("markers", "both") or len(ps) == 1:
            out.extend(_marker(shape, px(x), py(y), color) for x, y in ps)
        out.append("</g>")
        ly = top + 14 + 22 * i
        out.append(f'<line x1="{right + 14}" y1="{ly}" x2="{right + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(_marker(shape, right + 27, ly, color))
        out.append(f'<text x="{right + 46}" y="{ly + 4}" font-family="sans-serif" font-size="12" '
                   f'class="legend">{_escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_chart(path, *args, **kwargs) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_chart(*args, **kwargs), encoding="utf-8")
    return path
