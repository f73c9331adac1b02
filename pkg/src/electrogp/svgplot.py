"""Deterministic SVG rendering of planar fits.

The band is drawn as the curve path stroked with width ``2 rho`` and round
joins and caps, which is exactly the union of radius-``rho`` discs centred on
the polyline.
"""
from __future__ import annotations

import numpy as np

WIDTH = 640
HEIGHT = 640
PAD = 40  # pixels reserved around the plotting area for tick labels
MARGIN = 0.05
MARKER = 4.0


class PlotError(ValueError):
    pass


def _num(v):
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _bounds(points_list, rho):
    pts = np.vstack([p for p in points_list if p.size])
    lo = pts.min(axis=0) - rho
    hi = pts.max(axis=0) + rho
    span = np.maximum(hi - lo, 1e-12)
    # Equal aspect: both axes get the larger span.
    side = span.max() * (1.0 + 2.0 * MARGIN)
    centre = (lo + hi) / 2.0
    return centre - side / 2.0, side


def render(data, vertices, rho: float = 0.0, title: str | None = None) -> str:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    if data.shape[1] != 2 or vertices.shape[1] != 2:
        raise PlotError(
            f"plotting needs 2-dimensional data, got d={data.shape[1]}; "
            "use the CSV exports of curve/band/predict for other dimensions"
        )
    if rho < 0 or not np.isfinite(rho):
        raise PlotError("band radius must be a nonnegative number")
    origin, side = _bounds([data, vertices], rho)
    inner = min(WIDTH, HEIGHT) - 2 * PAD
    scale = inner / side

    def px(p):
        return PAD + (p[:, 0] - origin[0]) * scale, HEIGHT - PAD - (p[:, 1] - origin[1]) * scale

    vx, vy = px(vertices)
    coords = " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(vx, vy))
    path = "M" + " L".join(f"{_num(a)},{_num(b)}" for a, b in zip(vx, vy))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
    ]
    if title:
        safe = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        out.append(f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="14">{safe}</text>')
    out.append(
        f'<rect x="{PAD}" y="{PAD}" width="{inner}" height="{inner}" fill="none" stroke="#444" stroke-width="1"/>'
    )
    for frac in (0.0, 0.5, 1.0):
        tx = PAD + frac * inner
        ty = HEIGHT - PAD - frac * inner
        out.append(
            f'<text x="{_num(tx)}" y="{HEIGHT - PAD + 16}" text-anchor="middle" font-size="11">'
            f"{_num(origin[0] + frac * side)}</text>"
        )
        out.append(
            f'<text x="{PAD - 6}" y="{_num(ty + 4)}" text-anchor="end" font-size="11">'
            f"{_num(origin[1] + frac * side)}</text>"
        )
    out.append(
        f'<path class="band" d="{path}" fill="none" stroke="#6baed6" stroke-opacity="0.35" '
        f'stroke-width="{_num(2.0 * rho * scale)}" stroke-linejoin="round" stroke-linecap="round"/>'
    )
    out.append(f'<polyline class="curve" points="{coords}" fill="none" stroke="black" stroke-width="1.5"/>')
    dx, dy = px(data)
    h = MARKER
    out.append('<g class="data" fill="#d62728">')
    for a, b in zip(dx, dy):
        tri = f"{_num(a)},{_num(b - h)} {_num(a - h)},{_num(b + h)} {_num(a + h)},{_num(b + h)}"
        out.append(f'<polygon points="{tri}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, data, vertices, rho=0.0, title=None):
    text = render(data, vertices, rho, title)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return text
