"""Minimal, dependency-free SVG line charts for response/correction curves."""
from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .calibration import PolynomialCurve, read_csv_columns

COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

_W, _H = 480, 400
_LEFT, _RIGHT, _TOP, _BOTTOM = 60, 20, 20, 50


def _xy(x, y):
    px = _LEFT + x * (_W - _LEFT - _RIGHT)
    py = _H - _BOTTOM - y * (_H - _TOP - _BOTTOM)
    return px, py


def render_svg(series: Sequence[tuple], xlabel: str = "Input level (%)",
               ylabel: str = "Output level (%)") -> str:
    """Render ``(name, xs, ys)`` curves, all on [0, 1] axes shown as 0-100%."""
    if not series:
        raise ValueError("nothing to plot")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
    ]
    for tick in range(0, 101, 20):
        t = tick / 100
        x, y0 = _xy(t, 0)
        _, y1 = _xy(t, 1)
        x0, y = _xy(0, t)
        x1, _ = _xy(1, t)
        out.append(f'<line x1="{x:.2f}" y1="{y0:.2f}" x2="{x:.2f}" y2="{y1:.2f}" stroke="#dddddd"/>')
        out.append(f'<line x1="{x0:.2f}" y1="{y:.2f}" x2="{x1:.2f}" y2="{y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{x:.2f}" y="{y0 + 16:.2f}" font-size="11" text-anchor="middle">{tick}</text>')
        out.append(f'<text x="{x0 - 6:.2f}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{tick}</text>')
    ox, oy = _xy(0, 0)
    ex, ey = _xy(1, 1)
    out.append(f'<rect x="{ox:.2f}" y="{ey:.2f}" width="{ex - ox:.2f}" height="{oy - ey:.2f}" '
               f'fill="none" stroke="black"/>')
    out.append(f'<text x="{(ox + ex) / 2:.2f}" y="{_H - 12}" font-size="13" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(oy + ey) / 2:.2f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 16 {(oy + ey) / 2:.2f})">{escape(ylabel)}</text>')
    for i, (name, xs, ys) in enumerate(series):
        colour = COLOURS[i % len(COLOURS)]
        pts = " ".join("%.2f,%.2f" % _xy(float(x), float(np.clip(y, 0, 1))) for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" '
                   f'points="{pts}"><title>{escape(name)}</title></polyline>')
        lx, ly = ox + 10, ey + 16 + 16 * i
        out.append(f'<text x="{lx:.2f}" y="{ly:.2f}" font-size="11" fill="{colour}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def series_from_csv(text: str) -> list:
    """Curves from a CSV: ``input,<name>,...`` columns or one ``c0,c1,c2,c3`` row."""
    header, cols = read_csv_columns(text)
    if header == ["c0", "c1", "c2", "c3"]:
        poly = PolynomialCurve.from_csv(text)
        xs = np.linspace(0.0, 1.0, 101)
        return [("fit", xs, poly(xs))]
    if len(header) < 2 or header[0] != "input":
        raise ValueError("curve CSV must start with an 'input' column")
    xs = cols[0]
    if np.any((xs < 0) | (xs > 1)):
        raise ValueError("input levels must lie in [0, 1]")
    return [(name, xs, col) for name, col in zip(header[1:], cols[1:])]
