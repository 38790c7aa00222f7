"""De Bruijn dualization of a regular multigrid.

Every face of the arrangement maps to the joint ``sum_j m_j e_j`` where ``m``
is its band index vector, and every intersection of lines ``(i, k)`` and
``(j, l)`` maps to the tile whose four joints are the four faces around it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, InputError
from .geometry import (MultigridSpec, require_regular, square_grid_preset,
                       window_intersections)
from .tiling import Patch, Tiling, largest_component, make_patch, maximal_closure


def _tiles_from_intersections(spec: MultigridSpec, pairs, lines, points) -> Tiling:
    T = len(points)
    if T == 0:
        raise GeometryError("window contains no grid intersection")
    rows = np.arange(T)
    base = np.floor(spec.values(points)).astype(np.int64)
    # the two lines through the point are exactly at integer level k, l
    base[rows, pairs[:, 0]] = lines[:, 0] - 1
    base[rows, pairs[:, 1]] = lines[:, 1] - 1
    di = np.zeros_like(base)
    dj = np.zeros_like(base)
    di[rows, pairs[:, 0]] = 1
    dj[rows, pairs[:, 1]] = 1
    E = spec.edge_vectors
    ei, ej = E[pairs[:, 0]], E[pairs[:, 1]]
    ccw = (ei[:, 0] * ej[:, 1] - ei[:, 1] * ej[:, 0]) > 0
    c1 = np.where(ccw[:, None], base + di, base + dj)
    c3 = np.where(ccw[:, None], base + dj, base + di)
    corners = np.stack([base, c1, base + di + dj, c3], axis=1)  # (T, 4, r)
    index, inverse = np.unique(corners.reshape(-1, spec.r), axis=0, return_inverse=True)
    tiles = inverse.reshape(T, 4)
    positions = index @ E
    return Tiling(positions, tiles, index, pairs, lines, spec=spec)


def dualize(spec: MultigridSpec, window_radius: float) -> Tiling:
    """Parallelogram tiling dual to all intersections in the disc of radius ``window_radius``."""
    if not window_radius > 0:
        raise InputError("window radius must be positive")
    require_regular(spec, window_radius * 1.05 + 1.0)
    pairs, lines, points = window_intersections(spec, window_radius)
    return _tiles_from_intersections(spec, pairs, lines, points)


def square_patch(m: int, n: int) -> Tiling:
    """``m`` columns by ``n`` rows of unit squares with joints at ``(0..m) x (0..n)``."""
    if m < 1 or n < 1:
        raise InputError("grid dimensions must be positive")
    spec = square_grid_preset((0.5, 0.5))
    K, L = np.meshgrid(np.arange(1, m + 1), np.arange(1, n + 1), indexing="ij")
    lines = np.stack([K.ravel(), L.ravel()], axis=1)
    points = lines + 0.5
    pairs = np.tile([0, 1], (len(lines), 1))
    return _tiles_from_intersections(spec, pairs, lines, points)


@dataclass
class WorkingPatch:
    ambient: Tiling
    patch: Patch
    tiling: Tiling


def working_patch(spec: MultigridSpec, window_radius: float, fraction: float = 0.8) -> WorkingPatch:
    """Maximal closure of the tiles dual to intersections within ``fraction * window_radius``."""
    ambient = dualize(spec, window_radius)
    centres = ambient_intersection_points(ambient)
    inner = np.nonzero(np.linalg.norm(centres, axis=1) <= fraction * window_radius)[0]
    seed = largest_component(ambient, inner)
    if not seed:
        raise GeometryError("no tiles inside the inner window")
    patch = maximal_closure(ambient, seed)
    return WorkingPatch(ambient, patch, ambient.restrict(patch.tiles))


def ambient_intersection_points(tiling: Tiling) -> np.ndarray:
    """Multigrid-plane location of the intersection dual to each tile."""
    spec = tiling.spec
    if spec is None or not tiling.has_labels:
        raise InputError("tiling carries no multigrid labels")
    grads, offs = spec.gradients, spec.offsets
    out = np.empty((tiling.n_tiles, 2))
    for t, ((i, j), (k, l)) in enumerate(zip(tiling.grid_pair, tiling.line_indices)):
        G = np.array([grads[i], grads[j]])
        out[t] = np.linalg.solve(G, [k + offs[i], l + offs[j]])
    return out


@dataclass
class ConsistencyReport:
    edge_sharing_errors: list[int] = field(default_factory=list)
    edge_vector_errors: list[int] = field(default_factory=list)
    coincident_joints: list[tuple[int, int]] = field(default_factory=list)
    negative_tiles: list[int] = field(default_factory=list)
    angle_defects: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.edge_sharing_errors or self.edge_vector_errors or self.coincident_joints
                    or self.negative_tiles or self.angle_defects)


def verify_dual_consistency(tiling: Tiling, tol: float = 1e-9) -> ConsistencyReport:
    rep = ConsistencyReport()
    counts = tiling.edge_tile_count
    rep.edge_sharing_errors = [int(e) for e in np.nonzero((counts < 1) | (counts > 2))[0]]

    p = tiling.positions[tiling.tiles]
    if tiling.spec is not None and tiling.grid_pair is not None:
        E = tiling.spec.edge_vectors
        for t in range(tiling.n_tiles):
            allowed = np.concatenate([E[tiling.grid_pair[t]], -E[tiling.grid_pair[t]]])
            sides = np.roll(p[t], -1, axis=0) - p[t]
            for s in sides:
                if np.min(np.linalg.norm(allowed - s, axis=1)) > tol:
                    rep.edge_vector_errors.append(t)
                    break

    order = np.lexsort((tiling.positions[:, 1], tiling.positions[:, 0]))
    pos = tiling.positions[order]
    for a in range(len(pos)):
        b = a + 1
        while b < len(pos) and pos[b, 0] - pos[a, 0] <= tol:
            if abs(pos[b, 1] - pos[a, 1]) <= tol:
                rep.coincident_joints.append((int(order[a]), int(order[b])))
            b += 1

    rep.negative_tiles = [int(t) for t in np.nonzero(tiling.tile_areas() <= 0)[0]]

    # angles of the tiles around each interior joint must fill exactly one turn
    angle_sum = np.zeros(tiling.n_joints)
    for s in range(4):
        v = p[:, s]
        a = p[:, (s + 1) % 4] - v
        b = p[:, (s - 1) % 4] - v
        ang = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], np.einsum("ij,ij->i", a, b))
        np.add.at(angle_sum, tiling.tiles[:, s], ang)
    interior = tiling.interior_joint_mask
    bad = np.nonzero(interior & (np.abs(angle_sum - 2 * math.pi) > 1e-7))[0]
    rep.angle_defects = [int(v) for v in bad]
    return rep
