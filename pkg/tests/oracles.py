"""Independent reference computations used by the tests."""
from __future__ import annotations

from fractions import Fraction

import numpy as np


def exact_rank(rows) -> int:
    """Rank over the rationals by fraction-exact Gaussian elimination."""
    m = [[Fraction(v) for v in row] for row in rows]
    rank, ncols = 0, len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def exact_rigidity_rows(positions, bars):
    """Rigidity matrix rows with integer entries (positions must be integral)."""
    pos = [tuple(int(round(v)) for v in p) for p in positions]
    rows = []
    for v, w in bars:
        row = [0] * (2 * len(pos))
        dx, dy = pos[v][0] - pos[w][0], pos[v][1] - pos[w][1]
        row[2 * v], row[2 * v + 1] = dx, dy
        row[2 * w], row[2 * w + 1] = -dx, -dy
        rows.append(row)
    return rows


def nudged_corner_indices(spec, point, i, j, eps=1e-7):
    """Band index vectors of the four faces around the crossing of grids i and j,
    found by sampling just off the crossing point."""
    di, dj = spec.grids[i].direction, spec.grids[j].direction
    out = set()
    for a in (-1, 1):
        for b in (-1, 1):
            z = np.asarray(point) + eps * (a * di + b * dj)
            out.add(tuple(int(v) for v in np.floor(spec.values(z))))
    return out


def angle_mod_pi(a: float, b: float) -> float:
    d = (a - b) % np.pi
    return min(d, np.pi - d)
