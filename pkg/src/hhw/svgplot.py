"""Minimal SVG line plots, emitted directly with no plotting dependency.

Good enough for publication-style diagnostics: axes with ticks, a handful
of polyline series, a legend, and optional vertical rules.  Log-scale gap
plots are drawn by passing log10 values on a linear axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .csvio import atomic_write_text

__all__ = ["Series", "line_plot_svg", "LOG_CLAMP"]

LOG_CLAMP = 1e-300

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")

_W, _H = 800, 520
_ML, _MR, _MT, _MB = 72, 24, 44, 56


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    dashed: bool = False


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_plot_svg(
    path: str | Path,
    series: list[Series],
    title: str,
    xlabel: str,
    ylabel: str,
    vlines: list[tuple[float, str]] | None = None,
) -> None:
    finite_x: list[float] = []
    finite_y: list[float] = []
    for s in series:
        m = np.isfinite(s.x) & np.isfinite(s.y)
        finite_x.extend(np.asarray(s.x)[m].tolist())
        finite_y.extend(np.asarray(s.y)[m].tolist())
    for v, _ in vlines or []:
        if math.isfinite(v):
            finite_x.append(v)
    if not finite_x:
        finite_x = [0.0, 1.0]
        finite_y = [0.0, 1.0]
    x_lo, x_hi = min(finite_x), max(finite_x)
    y_lo, y_hi = min(finite_y), max(finite_y)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo -= 1.0
        y_hi += 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    def sx(x: float) -> float:
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(y: float) -> float:
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" font-size="15">{_esc(title)}</text>',
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>',
        f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 14}" text-anchor="middle">{_esc(xlabel)}</text>',
        f'<text x="18" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(_MT + _H - _MB) / 2:.1f})">{_esc(ylabel)}</text>',
    ]
    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        parts.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{_H - _MB + 18}" text-anchor="middle">{tx:.4g}</text>')
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        parts.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py + 4:.1f}" text-anchor="end">{ty:.4g}</text>')

    for idx, s in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        run: list[str] = []
        for i in range(x.size):
            if ok[i]:
                run.append(f"{sx(x[i]):.2f},{sy(y[i]):.2f}")
            elif run:
                parts.append(
                    f'<polyline fill="none" stroke="{color}"{dash} points="{" ".join(run)}"/>'
                )
                run = []
        if run:
            parts.append(
                f'<polyline fill="none" stroke="{color}"{dash} points="{" ".join(run)}"/>'
            )
        ly = _MT + 16 * idx
        parts.append(
            f'<line x1="{_W - _MR - 120}" y1="{ly}" x2="{_W - _MR - 96}" y2="{ly}" '
            f'stroke="{color}"{dash}/>'
        )
        parts.append(f'<text x="{_W - _MR - 90}" y="{ly + 4}">{_esc(s.label)}</text>')

    for v, label in vlines or []:
        if not math.isfinite(v) or not (x_lo <= v <= x_hi):
            continue
        px = sx(v)
        parts.append(
            f'<line x1="{px:.1f}" y1="{_MT}" x2="{px:.1f}" y2="{_H - _MB}" '
            f'stroke="#555" stroke-dasharray="3 3"/>'
        )
        parts.append(f'<text x="{px + 4:.1f}" y="{_MT + 12}">{_esc(label)}</text>')

    parts.append("</svg>")
    atomic_write_text(path, "\n".join(parts) + "\n")
