"""Static SVG rendering of tilings, braces and highlighted ribbons."""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .rigidity import brace_bar
from .tiling import Tiling

PALETTE = ["#8fb8de", "#f2c078", "#a8d5a2", "#e59a9a", "#c3a6d8", "#f0e07a", "#9fd8d8", "#d9b38c"]


def tile_classes(tiling: Tiling, decimals: int = 6) -> np.ndarray:
    """Congruence class id of each tile, by its acute angle (ids ordered by angle)."""
    ang = np.round(tiling.tile_angles(), decimals)
    _, inv = np.unique(ang, return_inverse=True)
    return inv


def render_svg(tiling: Tiling, braced: Iterable[int] = (), highlight: Iterable[int] = (),
               size: float = 800.0, margin: float = 10.0) -> str:
    braced = sorted(set(int(t) for t in braced))
    highlight = sorted(set(int(r) for r in highlight))
    lo = tiling.positions.min(axis=0)
    hi = tiling.positions.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    k = (size - 2 * margin) / span

    def xy(p) -> str:
        # flip y so the picture has the usual orientation
        return f"{margin + (p[0] - lo[0]) * k:.3f},{margin + (hi[1] - p[1]) * k:.3f}"

    cls = tile_classes(tiling)
    marked: set[int] = set()
    for r in highlight:
        if 0 <= r < len(tiling.ribbons):
            marked.update(tiling.ribbons[r].tiles)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
           f'viewBox="0 0 {size:.0f} {size:.0f}">']
    out.append('<g stroke="#333" stroke-width="0.8" stroke-linejoin="round">')
    for t in range(tiling.n_tiles):
        pts = " ".join(xy(tiling.positions[j]) for j in tiling.tiles[t])
        fill = "#d1495b" if t in marked else PALETTE[cls[t] % len(PALETTE)]
        out.append(f'<polygon points="{pts}" fill="{fill}"/>')
    out.append("</g>")
    if braced:
        out.append('<g stroke="#111" stroke-width="1.6">')
        for t in braced:
            a, b = brace_bar(tiling, t)
            pa, pb = xy(tiling.positions[a]).split(","), xy(tiling.positions[b]).split(",")
            out.append(f'<line x1="{pa[0]}" y1="{pa[1]}" x2="{pb[0]}" y2="{pb[1]}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
