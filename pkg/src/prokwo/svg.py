"""Minimal static SVG emission for report figures.

Styling is deliberately plain; every mark carries its exact data values in
``data-*`` attributes so figures can be checked mechanically.
"""

from __future__ import annotations

from typing import Sequence

CLASS_COLORS = {
    "noun": "#1b9e77",
    "verb": "#d95f02",
    "adjective": "#7570b3",
    "function_word": "#e7298a",
    "other": "#666666",
}
_SERIES_COLORS = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")


def _esc(text: str) -> str:
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _cell_color(r: float) -> str:
    alpha = min(1.0, abs(r))
    if r >= 0:
        return f"rgba(178,24,43,{alpha:.3f})"
    return f"rgba(33,102,172,{alpha:.3f})"


def correlogram_svg(labels: Sequence[str], r_matrix, title: str = "") -> str:
    """Lower-triangle correlation grid; cells carry data-r (empty if missing)."""
    n = len(labels)
    cell, margin = 90, 150
    width = margin + n * cell + 20
    height = 60 + n * cell + 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">'
    ]
    if title:
        out.append(f'<text x="10" y="20" font-size="14">{_esc(title)}</text>')
    for i, label in enumerate(labels):
        y = 60 + i * cell + cell // 2
        out.append(f'<text x="10" y="{y}" dominant-baseline="middle">{_esc(label)}</text>')
        x = margin + i * cell + cell // 2
        out.append(
            f'<text x="{x}" y="{50}" text-anchor="middle">{_esc(label)}</text>'
        )
    for i in range(n):
        for j in range(n):
            if j > i:
                continue
            r = r_matrix[i][j]
            x = margin + j * cell
            y = 60 + i * cell
            if r is None:
                fill = "#eeeeee"
                data_r = ""
                text = "n/a"
            else:
                fill = _cell_color(r)
                data_r = repr(float(r))
                text = f"{r:.2f}"
            out.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{fill}" stroke="#999" data-row="{_esc(labels[i])}" '
                f'data-col="{_esc(labels[j])}" data-r="{data_r}"/>'
            )
            out.append(
                f'<text x="{x + cell // 2}" y="{y + cell // 2}" text-anchor="middle" '
                f'dominant-baseline="middle">{text}</text>'
            )
    out.append("</svg>")
    return "\n".join(out)


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in values]


def line_chart_svg(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    title: str = "",
    y_label: str = "",
    y_range: tuple[float, float] | None = None,
) -> str:
    """One polyline per (name, xs, ys) series, points carry data-x/data-y."""
    width, height = 640, 400
    left, right, top, bottom = 60, 180, 40, 40
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    if not all_x:
        return '<svg xmlns="http://www.w3.org/2000/svg" width="640" height="400"/>'
    x_lo, x_hi = min(all_x), max(all_x)
    if y_range is not None:
        y_lo, y_hi = y_range
    else:
        y_lo, y_hi = min(all_y), max(all_y)
        pad = 0.05 * (y_hi - y_lo or 1.0)
        y_lo, y_hi = y_lo - pad, y_hi + pad
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">'
    ]
    if title:
        out.append(f'<text x="10" y="20" font-size="14">{_esc(title)}</text>')
    out.append(
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
        f'y2="{height - bottom}" stroke="#333"/>'
    )
    out.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="#333"/>'
    )
    if y_label:
        out.append(
            f'<text x="14" y="{top - 8}" font-size="11">{_esc(y_label)}</text>'
        )
    for tick in sorted(set(all_x)):
        (px,) = _scale([tick], x_lo, x_hi, left, width - right)
        out.append(
            f'<text x="{px:.1f}" y="{height - bottom + 16}" '
            f'text-anchor="middle">{tick:g}</text>'
        )
    for k, (name, xs, ys) in enumerate(series):
        color = _SERIES_COLORS[k % len(_SERIES_COLORS)]
        px = _scale(xs, x_lo, x_hi, left, width - right)
        py = _scale(ys, y_lo, y_hi, height - bottom, top)
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{points}" data-series="{_esc(name)}"/>'
        )
        for x, y, dx, dy in zip(px, py, xs, ys):
            out.append(
                f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}" '
                f'data-series="{_esc(name)}" data-x="{repr(float(dx))}" '
                f'data-y="{repr(float(dy))}"/>'
            )
        ly = top + 14 * k
        out.append(
            f'<rect x="{width - right + 8}" y="{ly - 8}" width="10" height="10" fill="{color}"/>'
        )
        out.append(f'<text x="{width - right + 22}" y="{ly}">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out)


def scatter_svg(
    points: Sequence[tuple[float, float, str, str]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
) -> str:
    """Scatter of (x, y, label, category) with category colors."""
    width, height = 560, 460
    left, right, top, bottom = 60, 150, 40, 50
    if not points:
        return '<svg xmlns="http://www.w3.org/2000/svg" width="560" height="460"/>'
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = 0.05 * (x_hi - x_lo or 1.0)
    y_pad = 0.05 * (y_hi - y_lo or 1.0)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">'
    ]
    if title:
        out.append(f'<text x="10" y="20" font-size="14">{_esc(title)}</text>')
    out.append(
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
        f'y2="{height - bottom}" stroke="#333"/>'
    )
    out.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="#333"/>'
    )
    if x_label:
        out.append(
            f'<text x="{(left + width - right) / 2:.0f}" y="{height - 12}" '
            f'text-anchor="middle">{_esc(x_label)}</text>'
        )
    if y_label:
        out.append(f'<text x="14" y="{top - 8}" font-size="11">{_esc(y_label)}</text>')
    if x_lo < 0 < x_hi:
        (zx,) = _scale([0.0], x_lo, x_hi, left, width - right)
        out.append(
            f'<line x1="{zx:.1f}" y1="{top}" x2="{zx:.1f}" y2="{height - bottom}" '
            f'stroke="#bbb" stroke-dasharray="4 3"/>'
        )
    for x, y, label, category in points:
        (px,) = _scale([x], x_lo, x_hi, left, width - right)
        (py,) = _scale([y], y_lo, y_hi, height - bottom, top)
        color = CLASS_COLORS.get(category, "#666666")
        out.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" fill="{color}" '
            f'fill-opacity="0.75" data-label="{_esc(label)}" '
            f'data-category="{_esc(category)}" data-x="{repr(float(x))}" '
            f'data-y="{repr(float(y))}"/>'
        )
    for k, (category, color) in enumerate(CLASS_COLORS.items()):
        ly = top + 16 * k
        out.append(
            f'<circle cx="{width - right + 14}" cy="{ly - 4}" r="5" fill="{color}"/>'
        )
        out.append(f'<text x="{width - right + 26}" y="{ly}">{_esc(category)}</text>')
    out.append("</svg>")
    return "\n".join(out)
