"""Ribbon shears as a free basis for the flexes of a parallelogram patch.

Every flex of a simply connected patch is uniquely a combination of the two
translations and one shear per ribbon.  ``expand_flex`` recovers the
coefficients by growing a region of cancelled tiles outwards from a base
tile: each newly reached tile either lies on one ribbon not used so far,
whose coefficient is then read off at the new joints, or on two used
ribbons, in which case nothing remains to cancel there.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ExpansionError, InputError, StructureError
from .geometry import MultigridSpec, require_regular
from .rigidity import Framework, flex_residual
from .tiling import Tiling


@dataclass(frozen=True)
class RibbonShear:
    ribbon: int
    base_joint: int
    moving: np.ndarray  # bool mask over joints
    vector: np.ndarray  # unit, orthogonal to the ribbon's internal edges

    @property
    def field(self) -> np.ndarray:
        return self.moving[:, None] * self.vector[None, :]


@dataclass
class Expansion:
    alpha_x: complex | float
    alpha_y: complex | float
    ribbons: np.ndarray
    residual: float
    base_joint: int
    base_tile: int
    tile_order: list[int] = field(default_factory=list)

    def reconstruct(self, shears: list[RibbonShear]) -> np.ndarray:
        n = len(shears[0].moving) if shears else 0
        dtype = np.result_type(self.ribbons.dtype, type(self.alpha_x))
        u = np.zeros((n, 2), dtype=dtype)
        u[:, 0] += self.alpha_x
        u[:, 1] += self.alpha_y
        for sh, a in zip(shears, self.ribbons):
            if a != 0:
                u[sh.moving] += a * sh.vector
        return u

    def to_json(self) -> dict:
        def num(v):
            v = complex(v)
            return v.real if v.imag == 0 else [v.real, v.imag]

        return {
            "alpha_x": num(self.alpha_x),
            "alpha_y": num(self.alpha_y),
            "ribbons": {str(k): num(a) for k, a in enumerate(self.ribbons)},
            "residual": self.residual,
            "base_joint": self.base_joint,
            "base_tile": self.base_tile,
        }


def default_base_joint(tiling: Tiling) -> int:
    centre = tiling.positions.mean(axis=0)
    used = np.unique(tiling.tiles.ravel())
    d = np.linalg.norm(tiling.positions[used] - centre, axis=1)
    return int(used[np.argmin(d)])


def default_base_tile(tiling: Tiling, base_joint: int) -> int:
    hits = np.nonzero((tiling.tiles == base_joint).any(axis=1))[0]
    if len(hits) == 0:
        raise InputError(f"joint {base_joint} lies on no tile")
    return int(hits.min())


def ribbon_sides(tiling: Tiling, rid: int) -> tuple[int, np.ndarray]:
    """Components of the joint graph once the ribbon's internal edges are cut."""
    keep = np.ones(len(tiling.edges), dtype=bool)
    keep[tiling.ribbon_internal_edges(rid)] = False
    e = tiling.edges[keep]
    n = tiling.n_joints
    g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    return connected_components(g, directed=False)


def build_ribbon_shears(tiling: Tiling, base_joint: int | None = None,
                        check: bool = True) -> list[RibbonShear]:
    if base_joint is None:
        base_joint = default_base_joint(tiling)
    if not 0 <= base_joint < tiling.n_joints:
        raise InputError("base joint outside the patch")
    fw = Framework.from_tiling(tiling) if check else None
    shears = []
    for rib in tiling.ribbons:
        ncomp, labels = ribbon_sides(tiling, rib.id)
        if ncomp != 2:
            raise StructureError(
                f"ribbon {rib.id} splits the patch into {ncomp} parts instead of 2")
        moving = labels != labels[base_joint]
        sh = RibbonShear(rib.id, base_joint, moving, tiling.shear_vector(rib.direction))
        if check:
            res = flex_residual(fw, sh.field)
            if res >= 1e-10:
                raise StructureError(f"shear of ribbon {rib.id} is not a flex (residual {res:.2e})")
        shears.append(sh)
    return shears


def expand_flex(tiling: Tiling, shears: list[RibbonShear], u, base_tile: int | None = None,
                order: str = "lowest", seed: int = 0, tol: float = 1e-8) -> Expansion:
    """Coefficients of ``u`` in the basis of translations and ribbon shears.

    ``order`` picks the next frontier tile: ``"lowest"`` / ``"highest"`` id
    first, or ``"random"`` (seeded).  Coefficients do not depend on it.
    """
    u = np.asarray(u)
    if u.shape != (tiling.n_joints, 2):
        raise InputError("velocity field does not match the patch joints")
    if len(shears) != len(tiling.ribbons):
        raise InputError("need exactly one shear per ribbon")
    p1 = shears[0].base_joint if shears else default_base_joint(tiling)
    if base_tile is None:
        base_tile = default_base_tile(tiling, p1)
    if p1 not in tiling.tiles[base_tile]:
        raise InputError("base tile must contain the base joint")
    scale = float(np.max(np.abs(u))) or 1.0
    limit = tol * scale

    dtype = np.result_type(u.dtype, float)
    res = u.astype(dtype, copy=True)
    alpha_x, alpha_y = res[p1, 0], res[p1, 1]
    res -= res[p1]
    alpha = np.zeros(len(shears), dtype=dtype)
    used = np.zeros(len(shears), dtype=bool)
    done_joint = np.zeros(tiling.n_joints, dtype=bool)
    done_tile = np.zeros(tiling.n_tiles, dtype=bool)
    dirs = tiling.direction_vectors
    ribs = tiling.ribbons

    def take(rid: int, joint: int):
        sh = shears[rid]
        m = dirs[ribs[rid].direction]
        m = m / np.linalg.norm(m)
        if abs(res[joint] @ m) > limit:
            raise ExpansionError(
                f"residual at joint {joint} is not parallel to the shear of ribbon {rid}; "
                "input is not a flex or the patch is not valid")
        a = res[joint] @ sh.vector
        alpha[rid] = a
        used[rid] = True
        res[sh.moving] -= a * sh.vector

    # base tile: each of its two ribbons moves one joint adjacent to p1 alone
    t0 = tiling.tiles[base_tile]
    for rid in tiling.tile_ribbons[base_tile]:
        mv = shears[rid].moving
        others = [s for s in tiling.tile_ribbons[base_tile] if s != rid]
        only = [int(q) for q in t0 if mv[q] and not shears[others[0]].moving[q]]
        take(int(rid), only[0])
    if np.max(np.abs(res[t0])) > limit:
        raise ExpansionError("cannot cancel the field on the base tile")
    done_joint[t0] = True
    done_tile[base_tile] = True

    rng = np.random.default_rng(seed)
    rank = {"lowest": np.arange(tiling.n_tiles), "highest": -np.arange(tiling.n_tiles),
            "random": rng.permutation(tiling.n_tiles)}.get(order)
    if rank is None:
        raise InputError(f"unknown order {order!r}")
    adj = tiling.tile_adjacency()
    heap: list[tuple[int, int]] = []

    def push_neighbours(t: int):
        for nb in adj.indices[adj.indptr[t]:adj.indptr[t + 1]]:
            if not done_tile[nb]:
                heapq.heappush(heap, (int(rank[nb]), int(nb)))

    push_neighbours(base_tile)
    visited = [base_tile]
    while heap:
        _, t = heapq.heappop(heap)
        if done_tile[t]:
            continue
        js = tiling.tiles[t]
        fresh = [int(r) for r in tiling.tile_ribbons[t] if not used[r]]
        if len(fresh) > 1:
            raise ExpansionError(f"tile {t} reached with two unused ribbons")
        if fresh:
            new = [int(q) for q in js if not done_joint[q]]
            if not new:
                raise ExpansionError(f"tile {t} has no new joint for ribbon {fresh[0]}")
            take(fresh[0], new[0])
        if np.max(np.abs(res[js])) > limit:
            raise ExpansionError(f"nonzero residual left on tile {t}")
        done_joint[js] = True
        done_tile[t] = True
        visited.append(t)
        push_neighbours(t)

    if not done_tile.all():
        raise ExpansionError("patch is not tile-connected")
    final = float(np.max(np.abs(res))) / scale
    if final > tol:
        raise ExpansionError(f"final residual {final:.2e} exceeds tolerance")
    if not used.all():
        raise ExpansionError("some ribbons were never used")
    return Expansion(alpha_x, alpha_y, alpha, final, p1, base_tile, visited)


# ------------------------------------------------------------ localisation

@dataclass
class LocalisationVerdict:
    localised: bool
    bulk_shear: bool
    width: float
    offending: list[int]


def _unit(direction) -> np.ndarray:
    if np.isscalar(direction):
        return np.array([math.cos(direction), math.sin(direction)])
    v = np.asarray(direction, dtype=float)
    return v / np.linalg.norm(v)


def ribbon_localised(tiling: Tiling, rid: int, direction, c: float,
                     offset: float | None = None) -> bool:
    """Tile centroids lie within ``c`` of a line parallel to ``direction``.

    With ``offset=None`` the best parallel line is used; otherwise the line at
    signed distance ``offset`` from the origin (``0`` = through the origin).
    """
    d = _unit(direction)
    normal = np.array([-d[1], d[0]])
    q = tiling.tile_centroids()[list(tiling.ribbons[rid].tiles)] @ normal
    if offset is None:
        return bool(q.max() - q.min() <= 2 * c)
    return bool(np.max(np.abs(q - offset)) <= c)


def default_width(tiling: Tiling) -> float:
    return 1.5 * float(tiling.tile_diameters().max())


def classify_localised(expansion: Expansion, tiling: Tiling, direction, c: float | None = None,
                       offset: float | None = None, coef_tol: float = 1e-9) -> LocalisationVerdict:
    if c is None:
        c = default_width(tiling)
    coeffs = np.abs(expansion.ribbons)
    scale = max(1.0, float(coeffs.max()) if len(coeffs) else 0.0)
    active = np.nonzero(coeffs > coef_tol * scale)[0]
    offending = [int(r) for r in active if not ribbon_localised(tiling, int(r), direction, c, offset)]
    ribbons_ok = not offending and len(active) > 0
    translation_zero = abs(expansion.alpha_x) <= coef_tol * scale and abs(expansion.alpha_y) <= coef_tol * scale
    return LocalisationVerdict(ribbons_ok and translation_zero, ribbons_ok, c, offending)


# --------------------------------------------------------- ribbon directions

def _crossing_data(spec: MultigridSpec, i: int):
    d = spec.grids[i].direction
    E = spec.edge_vectors
    rate = spec.gradients @ d  # index change of grid j per unit length along line i
    others = [j for j in range(spec.r) if j != i]
    inv_beta = np.abs(rate[others])
    delta = inv_beta / inv_beta.sum()
    sigma = np.sign(rate[others])
    return d, E[others], delta, sigma


def ribbon_direction(spec: MultigridSpec, i: int) -> np.ndarray:
    """Asymptotic direction of the ribbons dual to grid ``i``."""
    _, E, delta, sigma = _crossing_data(spec, i)
    v = (delta * sigma) @ E
    return v / np.linalg.norm(v)


def ribbon_tangent(spec: MultigridSpec, i: int) -> float:
    """Tangent of the angle from the grid-``i`` line direction to its ribbon direction."""
    d, E, delta, sigma = _crossing_data(spec, i)
    perp = np.array([-d[1], d[0]])
    steps = sigma[:, None] * E
    s = np.abs(steps @ d)
    t = steps @ perp
    return float((delta @ t) / (delta @ s))


def ribbon_figure(spec: MultigridSpec, tol: float = 1e-9) -> list[float]:
    """Angles in [0, pi) of the lines through the origin along which ribbons run."""
    require_regular(spec, 10.0)
    angles = []
    for i in range(spec.r):
        v = ribbon_direction(spec, i)
        a = math.atan2(v[1], v[0]) % math.pi
        if a > math.pi - tol:
            a = 0.0
        if all(min(abs(a - b), math.pi - abs(a - b)) > tol for b in angles):
            angles.append(a)
    return sorted(angles)


def fit_line_direction(points) -> np.ndarray:
    """Principal axis of a point cloud (total least squares line fit)."""
    pts = np.asarray(points, dtype=float)
    _, _, vt = np.linalg.svd(pts - pts.mean(axis=0), full_matrices=False)
    return vt[0]
