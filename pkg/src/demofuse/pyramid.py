"""Population pyramids as standalone SVG plus a monospaced text fallback.

Output is a pure function of the input: no timestamps, no generated ids,
fixed element order. Bar widths are ``count * px_per_unit`` written with
shortest round-trip float formatting, so scaling counts scales widths
exactly when the axis scale is fixed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from html import escape
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .tables import fmt_num

log = logging.getLogger(__name__)

MALE_FILL = "#3b6ea5"
FEMALE_FILL = "#c8553d"
PANEL_WIDTH = 420
HALF_WIDTH = 160.0  # longest bar, in px
ROW_HEIGHT = 18
BAR_HEIGHT = 14
TOP = 40
BOTTOM = 34
COLUMNS = 2


@dataclass(frozen=True)
class Panel:
    title: str
    counts: np.ndarray  # (L, 2): male, female
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None


@dataclass(frozen=True)
class PyramidSpec:
    panels: Tuple[Panel, ...]
    labels: Tuple[str, ...]
    title: str = ""
    px_per_unit: Optional[float] = None  # None: fit the largest value to HALF_WIDTH

    def scale(self) -> float:
        if self.px_per_unit is not None:
            return float(self.px_per_unit)
        peak = 0.0
        for p in self.panels:
            peak = max(peak, float(np.max(p.counts)) if p.counts.size else 0.0)
            if p.upper is not None:
                peak = max(peak, float(np.max(p.upper)))
        return HALF_WIDTH / peak if peak > 0 else 1.0


def _n(v: float) -> str:
    return fmt_num(v)


def _panel_svg(panel: Panel, labels: Sequence[str], scale: float, x0: float, y0: float) -> List[str]:
    L = len(labels)
    cx = x0 + PANEL_WIDTH / 2
    out = ['<g class="panel">',
           f'<text x="{_n(cx)}" y="{_n(y0 + 16)}" text-anchor="middle" font-size="13">{escape(panel.title)}</text>']
    top = y0 + TOP
    if not np.any(panel.counts > 0):
        log.warning("pyramid panel %r has no population", panel.title)
        out.append(f'<text x="{_n(cx)}" y="{_n(top + L * ROW_HEIGHT / 2)}" text-anchor="middle" '
                   f'font-size="12" fill="#a00">warning: empty table</text>')
    # youngest group in the bottom row
    for l in range(L):
        y = top + (L - 1 - l) * ROW_HEIGHT
        ymid = y + ROW_HEIGHT / 2
        out.append(f'<text x="{_n(x0 + 4)}" y="{_n(ymid + 4)}" font-size="10">{escape(labels[l])}</text>')
        for j, (sign, fill) in enumerate(((-1, MALE_FILL), (1, FEMALE_FILL))):
            w = float(panel.counts[l, j]) * scale
            x = cx - w if sign < 0 else cx
            sex = "male" if sign < 0 else "female"
            out.append(f'<rect class="{sex}" data-row="{l}" x="{_n(x)}" y="{_n(y + (ROW_HEIGHT - BAR_HEIGHT) / 2)}" '
                       f'width="{_n(w)}" height="{BAR_HEIGHT}" fill="{fill}"/>')
            if panel.lower is not None and panel.upper is not None:
                a = cx + sign * float(panel.lower[l, j]) * scale
                b = cx + sign * float(panel.upper[l, j]) * scale
                out.append(f'<path class="whisker" d="M{_n(a)} {_n(ymid)}H{_n(b)}'
                           f'M{_n(a)} {_n(ymid - 4)}V{_n(ymid + 4)}M{_n(b)} {_n(ymid - 4)}V{_n(ymid + 4)}" '
                           f'stroke="#111" stroke-width="1" fill="none"/>')
    axis_y = top + L * ROW_HEIGHT
    out.append(f'<path d="M{_n(cx)} {_n(top)}V{_n(axis_y)}M{_n(cx - HALF_WIDTH)} {_n(axis_y)}'
               f'H{_n(cx + HALF_WIDTH)}" stroke="#444" stroke-width="1" fill="none"/>')
    out.append(f'<text x="{_n(cx - HALF_WIDTH / 2)}" y="{_n(axis_y + 16)}" text-anchor="middle" font-size="11">Male</text>')
    out.append(f'<text x="{_n(cx + HALF_WIDTH / 2)}" y="{_n(axis_y + 16)}" text-anchor="middle" font-size="11">Female</text>')
    out.append("</g>")
    return out


def render_svg(spec: PyramidSpec) -> str:
    if not spec.panels:
        raise ValueError("nothing to draw")
    L = len(spec.labels)
    scale = spec.scale()
    cols = min(COLUMNS, len(spec.panels))
    rows = -(-len(spec.panels) // cols)
    panel_h = TOP + L * ROW_HEIGHT + BOTTOM
    head = 30 if spec.title else 0
    width, height = cols * PANEL_WIDTH, head + rows * panel_h
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="#fff"/>']
    if spec.title:
        out.append(f'<text x="{_n(width / 2)}" y="20" text-anchor="middle" font-size="15">{escape(spec.title)}</text>')
    for k, panel in enumerate(spec.panels):
        x0 = (k % cols) * PANEL_WIDTH
        y0 = head + (k // cols) * panel_h
        out.extend(_panel_svg(panel, spec.labels, scale, x0, y0))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_text(spec: PyramidSpec, half: int = 30) -> str:
    """Monospaced pyramid: one line per age group, oldest first."""
    peak = max(float(np.max(p.counts)) for p in spec.panels)
    lw = max(len(s) for s in spec.labels)
    lines = []
    if spec.title:
        lines.append(spec.title)
    for p in spec.panels:
        lines.append("")
        lines.append(f"[{p.title}]")
        if peak <= 0:
            lines.append("warning: empty table")
        for l in reversed(range(len(spec.labels))):
            m, f = (float(v) for v in p.counts[l])
            nm = int(round(m / peak * half)) if peak > 0 else 0
            nf = int(round(f / peak * half)) if peak > 0 else 0
            lines.append(f"{spec.labels[l]:>{lw}} {_n(round(m, 1)):>9} {'#' * nm:>{half}}|"
                         f"{'#' * nf:<{half}} {_n(round(f, 1))}")
        lines.append(f"{'':>{lw}} {'Male':>9} {'':>{half}}|{'':<{half}} Female")
    return "\n".join(lines) + "\n"


def render_pyramid(spec: PyramidSpec) -> Tuple[str, str]:
    """SVG document and text fallback for ``spec``."""
    return render_svg(spec), render_text(spec)
