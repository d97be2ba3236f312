"""Self-contained SVG rendering of growth-sweep records.

One log-log scatter per file: a circle marker per record, a solid line for
the fitted power law, and a dashed guide line with the reference exponent
through the fit's midpoint.  The text is assembled deterministically, so
identical inputs produce byte-identical files without any plotting
dependency.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence, Union

from .harness import ExperimentRecord, GrowthFit

_WIDTH, _HEIGHT = 640.0, 440.0
_MARGIN_LEFT, _MARGIN_RIGHT = 72.0, 24.0
_MARGIN_TOP, _MARGIN_BOTTOM = 28.0, 56.0

_MARKER_COLOR = "#1f6feb"
_FIT_COLOR = "#c43c39"
_GUIDE_COLOR = "#7a7a7a"
_FRAME_COLOR = "#444444"


def _fmt(value: float) -> str:
    return format(value, ".2f")


def _label(value: float) -> str:
    return format(value, ".6g")


class _LogAxes:
    """Maps (log abscissa, log S) points into pixel coordinates."""

    def __init__(self, xs: Sequence[float], ys: Sequence[float]) -> None:
        def padded(values: Sequence[float]) -> tuple[float, float]:
            lo, hi = min(values), max(values)
            span = hi - lo
            pad = 0.05 * span if span > 0 else 0.5
            return lo - pad, hi + pad

        self.x_lo, self.x_hi = padded(xs)
        self.y_lo, self.y_hi = padded(ys)
        self.plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
        self.plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(self, x: float) -> float:
        frac = (x - self.x_lo) / (self.x_hi - self.x_lo)
        return _MARGIN_LEFT + frac * self.plot_w

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return _MARGIN_TOP + (1.0 - frac) * self.plot_h


def emit_plot(
    records: Sequence[ExperimentRecord],
    fit: Union[GrowthFit, None],
    path,
) -> None:
    """Write the records (and optional fit) as a standalone SVG file."""
    if not records:
        raise ValueError("need at least one record to plot")
    xs = [math.log(r.abscissa) for r in records]
    ys = [math.log(r.S) if r.S > 0 else math.log(1e-300) for r in records]
    axes = _LogAxes(xs, ys)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
        f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">',
        f'<rect x="0" y="0" width="{_fmt(_WIDTH)}" height="{_fmt(_HEIGHT)}" '
        'fill="#ffffff"/>',
        f'<rect x="{_fmt(_MARGIN_LEFT)}" y="{_fmt(_MARGIN_TOP)}" '
        f'width="{_fmt(axes.plot_w)}" height="{_fmt(axes.plot_h)}" '
        f'fill="none" stroke="{_FRAME_COLOR}" stroke-width="1"/>',
    ]

    if fit is not None:
        x_mid = 0.5 * (axes.x_lo + axes.x_hi)

        def line_points(slope: float, intercept: float) -> str:
            pts = []
            for x in (axes.x_lo, axes.x_hi):
                y = intercept + slope * x
                pts.append(f"{_fmt(axes.px(x))},{_fmt(axes.py(y))}")
            return " ".join(pts)

        # Guide with the reference exponent, anchored at the fit midpoint.
        y_mid = fit.intercept + fit.slope * x_mid
        guide_intercept = y_mid - fit.reference * x_mid
        parts.append(
            f'<polyline class="guide" fill="none" stroke="{_GUIDE_COLOR}" '
            f'stroke-width="1.5" stroke-dasharray="6 4" '
            f'points="{line_points(fit.reference, guide_intercept)}"/>'
        )
        parts.append(
            f'<polyline class="fit" fill="none" stroke="{_FIT_COLOR}" '
            f'stroke-width="2" '
            f'points="{line_points(fit.slope, fit.intercept)}"/>'
        )

    for r, x, y in zip(records, xs, ys):
        parts.append(
            f'<circle class="marker" cx="{_fmt(axes.px(x))}" '
            f'cy="{_fmt(axes.py(y))}" r="4" fill="{_MARKER_COLOR}"/>'
        )

    model = records[0].model
    x_name = "scale count m" if model == "dyadic" else "log2(R/r)"
    parts.append(
        f'<text x="{_fmt(_MARGIN_LEFT + axes.plot_w / 2)}" '
        f'y="{_fmt(_HEIGHT - 14.0)}" font-family="monospace" font-size="13" '
        f'text-anchor="middle">{x_name}, log axis</text>'
    )
    parts.append(
        f'<text x="18" y="{_fmt(_MARGIN_TOP + axes.plot_h / 2)}" '
        f'font-family="monospace" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {_fmt(_MARGIN_TOP + axes.plot_h / 2)})">'
        "norm estimate S, log axis</text>"
    )
    legend_lines = [f"{model} n={records[0].n}, {len(records)} records"]
    if fit is not None:
        legend_lines.append(f"fitted slope {_label(fit.slope)}")
        legend_lines.append(f"reference slope {_label(fit.reference)}")
    for i, text in enumerate(legend_lines):
        parts.append(
            f'<text x="{_fmt(_MARGIN_LEFT + 10.0)}" '
            f'y="{_fmt(_MARGIN_TOP + 18.0 + 16.0 * i)}" '
            f'font-family="monospace" font-size="12">{text}</text>'
        )
    corners = [
        (axes.px(min(xs)), _HEIGHT - _MARGIN_BOTTOM + 16.0, _label(min(r.abscissa for r in records))),
        (axes.px(max(xs)), _HEIGHT - _MARGIN_BOTTOM + 16.0, _label(max(r.abscissa for r in records))),
    ]
    for cx, cy, text in corners:
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-family="monospace" '
            f'font-size="11" text-anchor="middle">{text}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
