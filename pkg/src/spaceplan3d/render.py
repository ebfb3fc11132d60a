"""Static SVG of a layout: XY, XZ and YZ orthographic projections."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .geometry import Floorplan, module_label

PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
)

# (panel title, horizontal axis index, vertical axis index)
VIEWS = (("XY (top)", 0, 1), ("XZ (front)", 0, 2), ("YZ (side)", 1, 2))

PANEL = 240
MARGIN = 30


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def render_svg(plan: Floorplan, title: str = "") -> str:
    bound = plan.bounding.as_tuple()
    width = len(VIEWS) * (PANEL + MARGIN) + MARGIN
    height = PANEL + 2 * MARGIN + 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
    ]
    if title:
        out.append(f'<text x="{MARGIN}" y="16" font-size="13">{escape(title)}</text>')
    for v, (name, a, b) in enumerate(VIEWS):
        scale = PANEL / max(bound[a], bound[b])
        left = MARGIN + v * (PANEL + MARGIN)
        base = MARGIN + 20 + PANEL  # SVG y grows downwards; flip so the origin is bottom-left
        out.append(f'<g class="view" data-view="{name.split()[0]}">')
        out.append(f'<text x="{left}" y="{MARGIN + 12}" font-size="11">{escape(name)}</text>')
        # bounding box outline; empty (dead) regions stay unfilled
        out.append(
            f'<rect class="bound" x="{_fmt(left)}" y="{_fmt(base - bound[b] * scale)}" '
            f'width="{_fmt(bound[a] * scale)}" height="{_fmt(bound[b] * scale)}" '
            f'fill="none" stroke="#333" stroke-dasharray="4 2"/>'
        )
        for p in plan.placements:
            lo, hi = p.origin, p.corner
            x = left + lo[a] * scale
            y = base - hi[b] * scale
            w = (hi[a] - lo[a]) * scale
            h = (hi[b] - lo[b]) * scale
            color = PALETTE[p.module_id % len(PALETTE)]
            label = module_label(p.module_id)
            out.append(
                f'<rect class="module" data-module="{label}" x="{_fmt(x)}" y="{_fmt(y)}" '
                f'width="{_fmt(w)}" height="{_fmt(h)}" fill="{color}" fill-opacity="0.45" stroke="#000" stroke-width="0.8"/>'
            )
            out.append(
                f'<text x="{_fmt(x + w / 2)}" y="{_fmt(y + h / 2)}" font-size="9" '
                f'text-anchor="middle" dominant-baseline="middle">{label}</text>'
            )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
