"""Deterministic SVG rendering of benchmark CSVs.

One panel per polynomial order, element count on a log2 x axis, Gflops/s
on a linear y axis, one polyline per variant.  No external plotting
dependency; output bytes depend only on the CSV content.
"""

from __future__ import annotations

import math
from typing import Sequence

from .bench import DEFAULT_VARIANTS, BenchRecord, read_csv
from .errors import ParseError

PANEL_W = 300
PANEL_H = 230
MARGIN_L = 46
MARGIN_R = 12
MARGIN_T = 28
MARGIN_B = 34
COLUMNS = 3
LEGEND_H = 24

_COLORS = {
    "oracle": "#777777",
    "interp-naive": "#1f77b4",
    "gen-naive": "#ff7f0e",
    "gen-opt": "#2ca02c",
}
_FALLBACK_COLOR = "#999999"


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _variant_order(names: set[str]) -> list[str]:
    ordered = [v for v in DEFAULT_VARIANTS if v in names]
    ordered += sorted(names - set(DEFAULT_VARIANTS))
    return ordered


def _panel(records: list[BenchRecord], lx: int, ox: float, oy: float) -> list[str]:
    xs = sorted({r.nel for r in records})
    x_lo = math.log2(xs[0])
    x_hi = math.log2(xs[-1])
    span = (x_hi - x_lo) or 1.0
    y_hi = max(r.gflops for r in records) or 1.0

    plot_w = PANEL_W - MARGIN_L - MARGIN_R
    plot_h = PANEL_H - MARGIN_T - MARGIN_B

    def px(nel: int) -> float:
        return ox + MARGIN_L + (math.log2(nel) - x_lo) / span * plot_w

    def py(g: float) -> float:
        return oy + MARGIN_T + (1.0 - g / y_hi) * plot_h

    out = [
        f'<text x="{_fmt(ox + PANEL_W / 2)}" y="{_fmt(oy + 16)}" '
        f'text-anchor="middle" class="title">lx={lx}</text>',
        f'<rect x="{_fmt(ox + MARGIN_L)}" y="{_fmt(oy + MARGIN_T)}" '
        f'width="{_fmt(plot_w)}" height="{_fmt(plot_h)}" class="frame"/>',
    ]
    for nel in xs:
        out.append(
            f'<text x="{_fmt(px(nel))}" y="{_fmt(oy + PANEL_H - MARGIN_B + 14)}" '
            f'text-anchor="middle" class="tick">{nel}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        g = y_hi * frac
        out.append(
            f'<text x="{_fmt(ox + MARGIN_L - 4)}" y="{_fmt(py(g) + 3)}" '
            f'text-anchor="end" class="tick">{_fmt(g)}</text>'
        )
    out.append(
        f'<text x="{_fmt(ox + PANEL_W / 2)}" y="{_fmt(oy + PANEL_H - 6)}" '
        f'text-anchor="middle" class="tick">nel</text>'
    )

    by_variant: dict[str, list[BenchRecord]] = {}
    for r in records:
        by_variant.setdefault(r.variant, []).append(r)
    for variant in _variant_order(set(by_variant)):
        color = _COLORS.get(variant, _FALLBACK_COLOR)
        pts = sorted(by_variant[variant], key=lambda r: r.nel)
        coords = " ".join(f"{_fmt(px(r.nel))},{_fmt(py(r.gflops))}" for r in pts)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        for r in pts:
            out.append(
                f'<circle cx="{_fmt(px(r.nel))}" cy="{_fmt(py(r.gflops))}" '
                f'r="2.5" fill="{color}"/>'
            )
    return out


def render_records(records: Sequence[BenchRecord]) -> str:
    """Compose the figure; records must be non-empty."""
    if not records:
        raise ParseError("no data rows to plot")
    lxs = sorted({r.lx for r in records})
    cols = min(COLUMNS, len(lxs))
    rows = (len(lxs) + cols - 1) // cols
    width = cols * PANEL_W
    height = LEGEND_H + rows * PANEL_H

    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        "<style>"
        "text{font-family:sans-serif;font-size:10px}"
        ".title{font-size:12px;font-weight:bold}"
        ".frame{fill:none;stroke:#444;stroke-width:1}"
        ".tick{fill:#444}"
        "</style>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    x = 8.0
    for variant in _variant_order({r.variant for r in records}):
        color = _COLORS.get(variant, _FALLBACK_COLOR)
        body.append(
            f'<rect x="{_fmt(x)}" y="8" width="14" height="6" fill="{color}"/>'
        )
        body.append(f'<text x="{_fmt(x + 18)}" y="14">{variant}</text>')
        x += 18 + 7 * len(variant) + 16
    for idx, lx in enumerate(lxs):
        ox = (idx % cols) * PANEL_W
        oy = LEGEND_H + (idx // cols) * PANEL_H
        body.extend(_panel([r for r in records if r.lx == lx], lx, ox, oy))
    body.append("</svg>")
    return "\n".join(body) + "\n"


def plot_svg(csv_text: str) -> str:
    """Parse a benchmark CSV and render it; empty input is a parse error."""
    return render_records(read_csv(csv_text))
