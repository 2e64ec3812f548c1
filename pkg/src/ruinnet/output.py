"""Deterministic CSV and SVG writers for experiment results.

CSV files are RFC-4180 (comma separated, CRLF line endings, minimal
quoting) with a header row; floats are printed with 6 significant digits
and missing values as empty fields, so identical results serialise to
identical bytes.
"""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable, Mapping, Optional, Sequence


def fmt(value) -> str:
    """Render one CSV cell: 6 significant digits for floats, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6g}"
    return str(value)


def render_csv(
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, object]],
    comment: Optional[str] = None,
) -> str:
    """Serialise rows to CSV text, optionally preceded by a comment line."""
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\r\n")
    writer = csv.writer(buf)
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([fmt(row.get(name)) for name in fieldnames])
    return buf.getvalue()


# --- SVG sweep plot ---------------------------------------------------------

_PANEL_W = 290
_PANEL_H = 250
_MARGIN_L = 52
_MARGIN_R = 14
_MARGIN_T = 30
_MARGIN_B = 38


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def sweep_svg(rows: Sequence[Mapping[str, object]]) -> str:
    """Scatter of log10 ruin probability against group size, one panel per
    ns value.

    Estimates are unfilled circles; the 2-standard-error interval endpoints
    are filled circles joined by a whisker line (drawn only where the
    endpoint is positive, since the vertical axis is logarithmic).
    """
    ns_values = sorted({int(r["ns"]) for r in rows})
    panels = {ns: [r for r in rows if int(r["ns"]) == ns] for ns in ns_values}
    width = _PANEL_W * max(1, len(ns_values))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{_PANEL_H}" '
        f'font-family="sans-serif" font-size="11">'
    ]
    for idx, ns in enumerate(ns_values):
        parts.append(_panel(panels[ns], ns, idx * _PANEL_W))
    parts.append("</svg>")
    return "\n".join(parts)


def _panel(rows: Sequence[Mapping[str, object]], ns: int, x0: float) -> str:
    ks = [int(r["qsize"]) for r in rows]
    k_lo, k_hi = min(ks) - 0.5, max(ks) + 0.5
    ys: list[float] = []
    points = []
    for r in rows:
        y = r.get("log10_psi")
        if y is None:
            continue
        lo = r.get("ci_lo")
        hi = r.get("ci_hi")
        y_lo = math.log10(lo) if isinstance(lo, (int, float)) and lo > 0 else None
        y_hi = math.log10(hi) if isinstance(hi, (int, float)) and hi > 0 else None
        points.append((int(r["qsize"]), float(y), y_lo, y_hi))
        ys.extend(v for v in (float(y), y_lo, y_hi) if v is not None)
    plot_w = _PANEL_W - _MARGIN_L - _MARGIN_R
    plot_h = _PANEL_H - _MARGIN_T - _MARGIN_B
    if ys:
        y_min, y_max = min(ys), max(ys)
        if y_max - y_min < 1e-9:
            y_min -= 0.5
            y_max += 0.5
        pad = 0.05 * (y_max - y_min)
        y_min -= pad
        y_max += pad
    else:
        y_min, y_max = -1.0, 0.0

    def sx(k: float) -> float:
        return x0 + _MARGIN_L + (k - k_lo) / (k_hi - k_lo) * plot_w

    def sy(y: float) -> float:
        return _MARGIN_T + (y_max - y) / (y_max - y_min) * plot_h

    out = [
        f'<g stroke="black" fill="none">'
        f'<rect x="{x0 + _MARGIN_L:.2f}" y="{_MARGIN_T}" '
        f'width="{plot_w:.2f}" height="{plot_h:.2f}"/></g>',
        f'<text x="{x0 + _MARGIN_L + plot_w / 2:.2f}" y="{_MARGIN_T - 10}" '
        f'text-anchor="middle">ns = {ns}</text>',
        f'<text x="{x0 + _MARGIN_L + plot_w / 2:.2f}" y="{_PANEL_H - 8}" '
        f'text-anchor="middle">group size</text>',
    ]
    for k in sorted(set(ks)):
        out.append(
            f'<line x1="{sx(k):.2f}" y1="{_MARGIN_T + plot_h:.2f}" '
            f'x2="{sx(k):.2f}" y2="{_MARGIN_T + plot_h + 4:.2f}" stroke="black"/>'
            f'<text x="{sx(k):.2f}" y="{_MARGIN_T + plot_h + 15:.2f}" '
            f'text-anchor="middle">{k}</text>'
        )
    for tick in _ticks(y_min, y_max):
        out.append(
            f'<line x1="{x0 + _MARGIN_L - 4:.2f}" y1="{sy(tick):.2f}" '
            f'x2="{x0 + _MARGIN_L:.2f}" y2="{sy(tick):.2f}" stroke="black"/>'
            f'<text x="{x0 + _MARGIN_L - 6:.2f}" y="{sy(tick) + 3:.2f}" '
            f'text-anchor="end">{tick:.3g}</text>'
        )
    for k, y, y_lo, y_hi in points:
        if y_lo is not None and y_hi is not None:
            out.append(
                f'<line class="whisker" x1="{sx(k):.2f}" y1="{sy(y_lo):.2f}" '
                f'x2="{sx(k):.2f}" y2="{sy(y_hi):.2f}" stroke="black"/>'
            )
        for y_end in (y_lo, y_hi):
            if y_end is not None:
                out.append(
                    f'<circle class="interval" cx="{sx(k):.2f}" cy="{sy(y_end):.2f}" '
                    f'r="2" fill="black"/>'
                )
        out.append(
            f'<circle class="estimate" cx="{sx(k):.2f}" cy="{sy(y):.2f}" '
            f'r="3.5" fill="none" stroke="black"/>'
        )
    return "\n".join(out)
