"""Regular multigrids as line arrangements.

A grid is the image of the vertical integer lines ``{x = m}`` under an
affine map ``z -> linear @ z + translation``.  Every point ``z`` of the
plane gets a band index ``floor(value(z))`` per grid, where ``value`` is
the first coordinate of the inverse affine map.  Lines of the grid are
the level sets ``value(z) = k``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidSpecError, IrregularMultigridError, OnLineError


@dataclass(frozen=True)
class AffineGrid:
    linear: tuple[tuple[float, float], tuple[float, float]]
    translation: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float)
        if lin.shape != (2, 2) or len(self.translation) != 2:
            raise InvalidSpecError("linear part must be 2x2 and translation a 2-vector")
        if not np.all(np.isfinite(lin)) or not np.all(np.isfinite(self.translation)):
            raise InvalidSpecError("non-finite grid coefficients")
        object.__setattr__(self, "linear", tuple(tuple(float(v) for v in row) for row in lin))
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.linear)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def gradient(self) -> np.ndarray:
        """Gradient of ``value``: the first row of the inverse linear part."""
        return np.linalg.inv(self.matrix)[0]

    @property
    def offset(self) -> float:
        return float(self.gradient @ np.array(self.translation))

    @property
    def normal(self) -> np.ndarray:
        g = self.gradient
        return g / np.linalg.norm(g)

    @property
    def direction(self) -> np.ndarray:
        """Unit direction of the grid lines (image of the y-axis)."""
        d = self.matrix[:, 1]
        return d / np.linalg.norm(d)

    @property
    def spacing(self) -> float:
        return float(1.0 / np.linalg.norm(self.gradient))

    def value(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) @ self.gradient - self.offset

    def line_point(self, k: int) -> np.ndarray:
        """A point on line ``k``."""
        return self.matrix @ np.array([float(k), 0.0]) + np.array(self.translation)

    def lines_in_disc(self, radius: float) -> range:
        """Indices of the lines meeting the closed disc about the origin."""
        g = np.linalg.norm(self.gradient)
        lo = math.ceil(-self.offset - radius * g)
        hi = math.floor(-self.offset + radius * g)
        return range(lo, hi + 1)


@dataclass(frozen=True)
class MultigridSpec:
    grids: tuple[AffineGrid, ...]
    weights: tuple[float, ...]
    warning: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "grids", tuple(self.grids))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.grids) < 2:
            raise InvalidSpecError("a multigrid needs at least two grids")
        if len(self.weights) != len(self.grids):
            raise InvalidSpecError("one weight per grid required")
        if any(not (w > 0 and math.isfinite(w)) for w in self.weights):
            raise InvalidSpecError("weights must be strictly positive")
        for n, grid in enumerate(self.grids):
            det = grid.det
            if abs(det) < 1e-12 * max(1.0, np.abs(grid.matrix).max() ** 2):
                raise InvalidSpecError(f"grid {n}: linear part is singular")
            if det < 0:
                raise InvalidSpecError(f"grid {n}: linear part has negative determinant")

    @property
    def r(self) -> int:
        return len(self.grids)

    @property
    def gradients(self) -> np.ndarray:
        return np.array([g.gradient for g in self.grids])

    @property
    def offsets(self) -> np.ndarray:
        return np.array([g.offset for g in self.grids])

    @property
    def edge_vectors(self) -> np.ndarray:
        """Dual edge vectors: unit normals towards increasing index, scaled by weight."""
        return np.array([w * g.normal for g, w in zip(self.grids, self.weights)])

    def values(self, z) -> np.ndarray:
        """Grid values of points ``z`` with shape (..., 2) -> (..., r)."""
        return np.asarray(z, dtype=float) @ self.gradients.T - self.offsets

    def to_dict(self) -> dict:
        return {
            "grids": [
                {"linear": [list(row) for row in g.linear], "translation": list(g.translation)}
                for g in self.grids
            ],
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MultigridSpec":
        try:
            grids = tuple(
                AffineGrid(tuple(map(tuple, g["linear"])), tuple(g.get("translation", (0.0, 0.0))))
                for g in doc["grids"]
            )
            weights = doc.get("weights") or [1.0] * len(grids)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpecError(f"malformed multigrid document: {exc}") from exc
        return cls(grids, tuple(weights))


@dataclass(frozen=True)
class GridIntersection:
    grid_pair: tuple[int, int]
    line_indices: tuple[int, int]
    point: tuple[float, float]
    arclength: float


@dataclass(frozen=True)
class LineIntersections:
    grid: int
    line: int
    intersections: list[GridIntersection]
    spacing: dict[int, float]
    phase: dict[int, float]


@dataclass
class RegularityReport:
    window_radius: float
    eps: float
    parallel_pairs: list[tuple[int, int]]
    triple_points: list[tuple[tuple[float, float], tuple[tuple[int, int], ...]]]
    fragile_points: list[tuple[tuple[float, float], tuple[tuple[int, int], ...]]]
    min_angle: float
    min_spacing: float
    min_clearance: float
    intersection_count: int

    @property
    def regular(self) -> bool:
        return not self.parallel_pairs and not self.triple_points

    @property
    def fragile(self) -> bool:
        return bool(self.fragile_points)

    @property
    def usable(self) -> bool:
        return self.regular and not self.fragile


def _clockwise(theta: float) -> tuple[tuple[float, float], tuple[float, float]]:
    c, s = math.cos(theta), math.sin(theta)
    return ((c, s), (-s, c))


def rotation_multigrid(angles: Sequence[float], gammas: Sequence[float],
                       weights: Sequence[float] | None = None,
                       normal_offsets: bool = False) -> MultigridSpec:
    """Grids ``A_k(z) = R_k z + (gamma_k, 0)`` with ``R_k`` clockwise rotation by ``angles[k]``.

    With ``normal_offsets`` the translation is ``gamma_k`` along the grid's own
    normal instead, so that line ``k`` of grid ``j`` is ``<z, n_j> = k + gamma_j``.
    """
    if len(angles) != len(gammas):
        raise InvalidSpecError("need one offset per grid")
    grids = []
    for a, g in zip(angles, gammas):
        rot = _clockwise(a)
        t = (float(g) * rot[0][0], float(g) * rot[1][0]) if normal_offsets else (float(g), 0.0)
        grids.append(AffineGrid(rot, t))
    grids = tuple(grids)
    return MultigridSpec(grids, tuple(weights) if weights is not None else (1.0,) * len(grids))


def pentagrid_preset(gammas: Sequence[float], tol: float = 1e-9,
                     normal_offsets: bool = False) -> MultigridSpec:
    """Five grids at clockwise rotations ``2 pi (k - 1) / 5``.

    By default the offsets enter as ``R_k z + (gamma_k, 0)``, which moves
    grid ``k`` by ``gamma_k cos(2 pi (k - 1) / 5)`` along its normal.  With
    ``normal_offsets=True`` the ``gamma_k`` are the normal offsets themselves,
    and a zero sum then gives the classical Penrose rhomb tilings.
    """
    if len(gammas) != 5:
        raise InvalidSpecError("pentagrid needs 5 offsets")
    spec = rotation_multigrid([2 * math.pi * k / 5 for k in range(5)], gammas,
                              normal_offsets=normal_offsets)
    total = float(sum(gammas))
    if abs(total) > tol:
        msg = f"pentagrid offsets sum to {total:g}, not 0"
        warnings.warn(msg, stacklevel=2)
        spec = MultigridSpec(spec.grids, spec.weights, warning=msg)
    return spec


def tetragrid_preset(gammas: Sequence[float], normal_offsets: bool = False) -> MultigridSpec:
    if len(gammas) != 4:
        raise InvalidSpecError("tetragrid needs 4 offsets")
    return rotation_multigrid([math.pi * k / 4 for k in range(4)], gammas,
                              normal_offsets=normal_offsets)


def square_grid_preset(offsets: Sequence[float] = (0.5, 0.5)) -> MultigridSpec:
    """Vertical and horizontal unit grids; dual edge vectors (1, 0) and (0, 1)."""
    return MultigridSpec(
        (AffineGrid(((1.0, 0.0), (0.0, 1.0)), (float(offsets[0]), 0.0)),
         AffineGrid(((0.0, -1.0), (1.0, 0.0)), (0.0, float(offsets[1])))),
        (1.0, 1.0),
    )


def grid_index(spec: MultigridSpec, j: int, z, eps: float = 1e-12) -> int:
    grid = spec.grids[j]
    v = float(grid.value(z))
    k = round(v)
    if abs(v - k) * grid.spacing < eps:
        raise OnLineError(j, int(k))
    return math.floor(v)


def index_vector(spec: MultigridSpec, z, eps: float = 1e-12) -> tuple[int, ...]:
    return tuple(grid_index(spec, j, z, eps) for j in range(spec.r))


def parallel_pairs(spec: MultigridSpec, tol: float = 1e-9) -> list[tuple[int, int]]:
    normals = np.array([g.normal for g in spec.grids])
    out = []
    for i in range(spec.r):
        for j in range(i + 1, spec.r):
            if abs(normals[i, 0] * normals[j, 1] - normals[i, 1] * normals[j, 0]) < tol:
                out.append((i, j))
    return out


def window_intersections(spec: MultigridSpec, window_radius: float):
    """All pairwise grid intersections in the closed disc of radius ``window_radius``.

    Returns ``(pairs, lines, points)`` arrays of shapes (N, 2), (N, 2), (N, 2),
    sorted by (i, j, k, l).
    """
    pairs, lines, points = [], [], []
    grads, offs = spec.gradients, spec.offsets
    for i in range(spec.r):
        ks = np.array(spec.grids[i].lines_in_disc(window_radius))
        for j in range(i + 1, spec.r):
            ls = np.array(spec.grids[j].lines_in_disc(window_radius))
            if len(ks) == 0 or len(ls) == 0:
                continue
            G = np.array([grads[i], grads[j]])
            if abs(np.linalg.det(G)) < 1e-12:
                continue
            K, L = np.meshgrid(ks, ls, indexing="ij")
            rhs = np.stack([K.ravel() + offs[i], L.ravel() + offs[j]], axis=1)
            pts = np.linalg.solve(G, rhs.T).T
            keep = np.einsum("ij,ij->i", pts, pts) <= window_radius ** 2
            n = int(keep.sum())
            pairs.append(np.tile([i, j], (n, 1)))
            lines.append(np.stack([K.ravel()[keep], L.ravel()[keep]], axis=1))
            points.append(pts[keep])
    if not points:
        return np.zeros((0, 2), int), np.zeros((0, 2), int), np.zeros((0, 2))
    return (np.concatenate(pairs).astype(int), np.concatenate(lines).astype(int),
            np.concatenate(points))


def _clearances(spec: MultigridSpec, pairs: np.ndarray, points: np.ndarray):
    """Distance from each intersection to the nearest line of every other grid."""
    vals = spec.values(points)
    nearest = np.rint(vals)
    spacing = np.array([g.spacing for g in spec.grids])
    dist = np.abs(vals - nearest) * spacing
    rows = np.arange(len(points))
    dist[rows, pairs[:, 0]] = np.inf
    dist[rows, pairs[:, 1]] = np.inf
    return dist, nearest.astype(int)


def validate_regular(spec: MultigridSpec, window_radius: float,
                     eps: float | None = None) -> RegularityReport:
    if not window_radius > 0:
        raise InvalidSpecError("window radius must be positive")
    if eps is None:
        eps = 1e-9 * window_radius
    if not eps > 0:
        raise InvalidSpecError("eps must be positive")
    par = parallel_pairs(spec)
    normals = np.array([g.normal for g in spec.grids])
    angles = []
    for i in range(spec.r):
        for j in range(i + 1, spec.r):
            c = abs(float(normals[i] @ normals[j]))
            angles.append(math.acos(min(1.0, c)))
    min_spacing = min(g.spacing for g in spec.grids)
    if par:
        return RegularityReport(window_radius, eps, par, [], [], min(angles), min_spacing,
                                0.0, 0)

    pairs, lines, points = window_intersections(spec, window_radius)
    triples: dict[tuple, tuple] = {}
    fragile: dict[tuple, tuple] = {}
    min_clearance = math.inf
    if len(points) and spec.r > 2:
        dist, nearest = _clearances(spec, pairs, points)
        min_clearance = float(dist.min())
        for n, g in zip(*np.nonzero(dist < 1e3 * eps)):
            i, j = pairs[n]
            key = tuple(sorted([(int(i), int(lines[n, 0])), (int(j), int(lines[n, 1])),
                                (int(g), int(nearest[n, g]))]))
            entry = (tuple(map(float, points[n])), key)
            fragile.setdefault(key, entry)
            if dist[n, g] < eps:
                triples.setdefault(key, entry)
    return RegularityReport(
        window_radius, eps, [], sorted(triples.values(), key=lambda e: e[1]),
        sorted(fragile.values(), key=lambda e: e[1]), min(angles), min_spacing,
        min_clearance, len(points),
    )


def require_regular(spec: MultigridSpec, window_radius: float) -> RegularityReport:
    report = validate_regular(spec, window_radius)
    if report.parallel_pairs:
        raise IrregularMultigridError(f"parallel grids {report.parallel_pairs}")
    if report.triple_points:
        raise IrregularMultigridError(
            f"{len(report.triple_points)} triple point(s) in window, e.g. {report.triple_points[0]}")
    if report.fragile:
        raise IrregularMultigridError(
            f"near-triple point(s) within {1e3 * report.eps:g}: {report.fragile_points[0]}")
    return report


def intersections_on_line(spec: MultigridSpec, i: int, k: int,
                          window_radius: float) -> LineIntersections:
    """Intersections of line ``k`` of grid ``i`` with all other grids, inside the window.

    Arclength is measured along the grid direction from ``line_point(k)``.
    """
    require_regular(spec, window_radius)
    grid = spec.grids[i]
    q0 = grid.line_point(k)
    d = grid.direction
    foot = -float(q0 @ d)
    dist2 = float(q0 @ q0) - foot ** 2
    spacing, phase, found = {}, {}, []
    half = math.sqrt(window_radius ** 2 - dist2) if dist2 <= window_radius ** 2 else None
    for j in range(spec.r):
        if j == i:
            continue
        other = spec.grids[j]
        rate = float(other.gradient @ d)
        beta = 1.0 / abs(rate)
        v0 = float(other.value(q0))
        spacing[j] = beta
        phase[j] = ((0.0 - v0) / rate) % beta
        if half is None:
            continue
        s_lo, s_hi = foot - half, foot + half
        l_a, l_b = v0 + rate * s_lo, v0 + rate * s_hi
        for l in range(math.ceil(min(l_a, l_b)), math.floor(max(l_a, l_b)) + 1):
            s = (l - v0) / rate
            p = q0 + s * d
            if p @ p > window_radius ** 2:
                continue
            pair, idx = ((i, j), (k, l)) if i < j else ((j, i), (l, k))
            found.append(GridIntersection(pair, idx, (float(p[0]), float(p[1])), float(s)))
    found.sort(key=lambda x: x.arclength)
    return LineIntersections(i, k, found, spacing, phase)
