"""Tiny polyline SVG writer. Plots are a convenience; CSV is the contract."""

from __future__ import annotations

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_W = 720
_PANEL_H = 220
_MARGIN = 48


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _panel_svg(panel: dict, y_off: int, idx: int) -> list:
    series = panel["series"]
    xs = np.concatenate([np.asarray(s["x"], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s["y"], dtype=float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0 -= pad
    y1 += pad

    left, right = _MARGIN, _W - 12
    top, bottom = y_off + 24, y_off + _PANEL_H - 28

    def px(x):
        return left + (x - x0) / (x1 - x0) * (right - left)

    def py(y):
        return bottom - (y - y0) / (y1 - y0) * (bottom - top)

    out = [
        f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
        'fill="none" stroke="#999" stroke-width="1"/>',
        f'<text x="{left}" y="{y_off + 16}" font-size="13" fill="#333">{panel.get("title", "")}</text>',
        f'<text x="{left - 6}" y="{bottom + 4}" font-size="10" fill="#666" text-anchor="end">{_fmt(y0)}</text>',
        f'<text x="{left - 6}" y="{top + 8}" font-size="10" fill="#666" text-anchor="end">{_fmt(y1)}</text>',
        f'<text x="{left}" y="{bottom + 16}" font-size="10" fill="#666">{_fmt(x0)}</text>',
        f'<text x="{right}" y="{bottom + 16}" font-size="10" fill="#666" text-anchor="end">{_fmt(x1)}</text>',
    ]
    legend_x = left + 8
    for i, s in enumerate(series):
        color = s.get("color", PALETTE[i % len(PALETTE)])
        dash = ' stroke-dasharray="5,4"' if s.get("dash") else ""
        pts = " ".join(
            f"{px(float(xv)):.2f},{py(float(yv)):.2f}"
            for xv, yv in zip(np.asarray(s["x"], float), np.asarray(s["y"], float))
        )
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.3"{dash}/>')
        if s.get("label"):
            out.append(
                f'<text x="{legend_x}" y="{top + 14}" font-size="10" fill="{color}">{s["label"]}</text>'
            )
            legend_x += 9 * len(s["label"]) + 14
    return out


def render_panels(panels: list) -> str:
    height = _PANEL_H * len(panels)
    body = []
    for i, panel in enumerate(panels):
        body.extend(_panel_svg(panel, i * _PANEL_H, i))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{height}" '
        f'viewBox="0 0 {_W} {height}">\n<rect width="100%" height="100%" fill="white"/>\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )


def write_svg(path, panels: list) -> None:
    with open(path, "w") as f:
        f.write(render_panels(panels))
