"""Minimal hand-rolled SVG line/hull plots for sweep outputs.

No plotting dependency: the renderer emits plain SVG with a median polyline
and a min-max hull polygon per series, plus an optional dashed threshold
line. Every series element carries a ``data-x``/``data-y`` attribute holding
the exact numeric values that were plotted, so files are machine-checkable
against the CSV they came from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

from .errors import StructuralError

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 30, 50


@dataclass
class Series:
    """One plotted series: a center line with an optional min/max hull."""

    label: str
    x: Sequence[float]
    center: Sequence[float]
    lo: Optional[Sequence[float]] = None
    hi: Optional[Sequence[float]] = None
    color: str = "#1f77b4"
    dashed: bool = False


def _fmt(v: float) -> str:
    return format(v, ".17g")


def _ticks(lo: float, hi: float, log: bool, count: int = 5) -> List[float]:
    if log:
        lo_e, hi_e = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**e for e in range(int(lo_e), int(hi_e) + 1)]
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


class Axis:
    def __init__(self, lo: float, hi: float, pix_lo: float, pix_hi: float, log: bool):
        if log and lo <= 0:
            raise StructuralError("log axis requires positive data")
        if hi == lo:
            pad = abs(lo) * 0.5 + 1.0 if not log else 0.0
            if log:
                lo, hi = lo / 2.0, hi * 2.0
            else:
                lo, hi = lo - pad, hi + pad
        self.lo, self.hi, self.log = lo, hi, log
        self.pix_lo, self.pix_hi = pix_lo, pix_hi

    def __call__(self, v: float) -> float:
        if self.log:
            frac = (math.log10(v) - math.log10(self.lo)) / (
                math.log10(self.hi) - math.log10(self.lo)
            )
        else:
            frac = (v - self.lo) / (self.hi - self.lo)
        return self.pix_lo + frac * (self.pix_hi - self.pix_lo)


def render_svg(
    series: List[Series],
    x_label: str,
    y_label: str,
    title: str = "",
    x_log: bool = False,
    y_log: bool = False,
) -> str:
    """Render series into a standalone SVG document string."""
    if not series:
        raise StructuralError("nothing to plot")
    xs = [v for s in series for v in s.x]
    ys = []
    for s in series:
        ys.extend(s.center)
        if s.lo is not None:
            ys.extend(s.lo)
        if s.hi is not None:
            ys.extend(s.hi)
    ys = [v for v in ys if math.isfinite(v)]
    if not ys:
        raise StructuralError("no finite values to plot")
    if y_log and min(ys) <= 0:
        y_log = False

    ax_x = Axis(min(xs), max(xs), MARGIN_L, WIDTH - MARGIN_R, x_log)
    ax_y = Axis(min(ys), max(ys), HEIGHT - MARGIN_B, MARGIN_T, y_log)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle">{title}</text>'
        )

    # Axes and ticks.
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{WIDTH - MARGIN_R}" y2="{y0}" stroke="black"/>'
    )
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_T}" stroke="black"/>')
    for tv in _ticks(ax_x.lo, ax_x.hi, x_log):
        if tv < ax_x.lo * (1 - 1e-12) or tv > ax_x.hi * (1 + 1e-12):
            continue
        px = ax_x(tv)
        parts.append(f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle">{tv:.4g}</text>'
        )
    for tv in _ticks(ax_y.lo, ax_y.hi, y_log):
        py = ax_y(tv)
        parts.append(f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end">{tv:.4g}</text>'
        )
    parts.append(
        f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) / 2:.1f}" y="{HEIGHT - 12}" '
        f'text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{(MARGIN_T + HEIGHT - MARGIN_B) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(MARGIN_T + HEIGHT - MARGIN_B) / 2:.1f})">{y_label}</text>'
    )

    def poly_points(xv, yv):
        return " ".join(
            f"{ax_x(a):.3f},{ax_y(b):.3f}" for a, b in zip(xv, yv) if math.isfinite(b)
        )

    for s in series:
        if s.lo is not None and s.hi is not None:
            hull_x = list(s.x) + list(reversed(s.x))
            hull_y = list(s.lo) + list(reversed(list(s.hi)))
            pts = poly_points(hull_x, hull_y)
            parts.append(
                f'<polygon points="{pts}" fill="{s.color}" fill-opacity="0.18" stroke="none" '
                f'data-label="{s.label}-hull" '
                f'data-lo="{" ".join(_fmt(v) for v in s.lo)}" '
                f'data-hi="{" ".join(_fmt(v) for v in s.hi)}"/>'
            )
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        parts.append(
            f'<polyline points="{poly_points(s.x, s.center)}" fill="none" stroke="{s.color}" '
            f'stroke-width="1.6"{dash} data-label="{s.label}" '
            f'data-x="{" ".join(_fmt(v) for v in s.x)}" '
            f'data-y="{" ".join(_fmt(v) for v in s.center)}"/>'
        )

    # Legend.
    ly = MARGIN_T + 6
    for s in series:
        parts.append(
            f'<line x1="{WIDTH - MARGIN_R - 150}" y1="{ly}" x2="{WIDTH - MARGIN_R - 120}" '
            f'y2="{ly}" stroke="{s.color}" stroke-width="2"'
            + (' stroke-dasharray="6 4"' if s.dashed else "")
            + "/>"
        )
        parts.append(f'<text x="{WIDTH - MARGIN_R - 114}" y="{ly + 4}">{s.label}</text>')
        ly += 16

    parts.append("</svg>")
    return "\n".join(parts)
