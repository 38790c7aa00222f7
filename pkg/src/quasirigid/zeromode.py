"""Phase-periodic flexes (zero modes) of multigrid tilings and their spectrum.

A field of the form ``u(p_m) = omega**m * b[class(m)]`` is fixed by one
complex 2-vector per translation class of vertex stars.  Each class of
bars then contributes a single linear equation in those unknowns, and the
resulting symbol matrix loses rank exactly at the multiphases that carry
a zero mode.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InputError
from .tiling import Tiling

Star = tuple[tuple[int, int], ...]  # sorted (grid id, +1/-1) pairs


@dataclass(frozen=True)
class Multiphase:
    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=complex).ravel()
        if np.any(np.abs(np.abs(w) - 1.0) > 1e-12):
            raise InputError("multiphase entries must have unit modulus")
        object.__setattr__(self, "omega", w)

    @classmethod
    def from_turns(cls, gammas) -> "Multiphase":
        return cls(np.exp(2j * np.pi * np.asarray(gammas, dtype=float)))

    @classmethod
    def circle(cls, r: int, i: int, t: float) -> "Multiphase":
        g = np.zeros(r)
        g[i] = t
        return cls.from_turns(g)

    @property
    def r(self) -> int:
        return len(self.omega)

    def phase(self, index: np.ndarray) -> np.ndarray:
        """``omega**m`` for each row ``m`` of an integer index array."""
        ang = np.angle(self.omega)
        return np.exp(1j * (np.asarray(index) @ ang))


@dataclass(frozen=True)
class StarClass:
    id: int
    star: Star
    representative: int
    size: int


@dataclass(frozen=True)
class EdgeClass:
    a: int
    b: int
    grid: int


def _edge_steps(tiling: Tiling) -> tuple[np.ndarray, np.ndarray]:
    """Grid id and sign of every edge, read from the index difference."""
    if tiling.index is None:
        raise InputError("tiling carries no index vectors")
    diff = tiling.index[tiling.edges[:, 1]] - tiling.index[tiling.edges[:, 0]]
    grid = np.argmax(np.abs(diff), axis=1)
    sign = diff[np.arange(len(diff)), grid]
    if np.any(np.abs(diff).sum(axis=1) != 1):
        raise GeometryError("an edge joins joints whose indices differ in more than one place")
    return grid, sign


def joint_stars(tiling: Tiling) -> dict[int, Star]:
    grid, sign = _edge_steps(tiling)
    stars: dict[int, list[tuple[int, int]]] = {}
    for (v, w), j, s in zip(tiling.edges, grid, sign):
        stars.setdefault(int(v), []).append((int(j), int(s)))
        stars.setdefault(int(w), []).append((int(j), -int(s)))
    interior = tiling.interior_joint_mask
    return {v: tuple(sorted(st)) for v, st in stars.items() if interior[v]}


def star_classes(tiling: Tiling) -> list[StarClass]:
    """Translation classes of the full vertex stars of interior joints."""
    stars = joint_stars(tiling)
    if not stars:
        raise GeometryError("patch has no interior joints")
    groups: dict[Star, list[int]] = {}
    for v in sorted(stars):
        groups.setdefault(stars[v], []).append(v)
    return [StarClass(n, st, groups[st][0], len(groups[st])) for n, st in enumerate(sorted(groups))]


@dataclass
class SymbolMatrix:
    """Symbol of the flex equations over star classes; rows are edge classes."""
    r: int
    edge_vectors: np.ndarray
    classes: list[StarClass]
    edge_classes: list[EdgeClass]
    joint_class: dict[int, int]
    stable: bool | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.edge_classes), 2 * len(self.classes)

    @property
    def edge_keys(self) -> set[tuple[Star, Star, int]]:
        return {(self.classes[e.a].star, self.classes[e.b].star, e.grid) for e in self.edge_classes}

    def evaluate(self, omega: Multiphase | np.ndarray) -> np.ndarray:
        w = omega.omega if isinstance(omega, Multiphase) else np.asarray(omega, dtype=complex)
        return self.evaluate_many(w[None, :])[0]

    def evaluate_many(self, omegas: np.ndarray) -> np.ndarray:
        """Stack of symbol matrices, one per row of ``omegas``."""
        omegas = np.atleast_2d(np.asarray(omegas, dtype=complex))
        if omegas.shape[1] != self.r:
            raise InputError(f"multiphase needs {self.r} entries")
        rows, cols = self.shape
        out = np.zeros((len(omegas), rows, cols), dtype=complex)
        for n, ec in enumerate(self.edge_classes):
            e = self.edge_vectors[ec.grid]
            out[:, n, 2 * ec.a:2 * ec.a + 2] += e
            out[:, n, 2 * ec.b:2 * ec.b + 2] -= omegas[:, ec.grid, None] * e
        return out

    def field(self, kernel_vector, omega: Multiphase, index: np.ndarray) -> np.ndarray:
        """Phase-periodic field on the interior joints (zero elsewhere)."""
        b = np.asarray(kernel_vector, dtype=complex).reshape(-1, 2)
        u = np.zeros((len(index), 2), dtype=complex)
        ids = np.array(sorted(self.joint_class), dtype=np.int64)
        cls = np.array([self.joint_class[v] for v in ids], dtype=np.int64)
        u[ids] = omega.phase(index[ids])[:, None] * b[cls]
        return u


def symbol_matrix(tiling: Tiling) -> SymbolMatrix:
    if tiling.spec is None:
        raise InputError("tiling carries no multigrid")
    classes = star_classes(tiling)
    by_star = {c.star: c.id for c in classes}
    stars = joint_stars(tiling)
    joint_class = {v: by_star[s] for v, s in stars.items()}
    grid, sign = _edge_steps(tiling)
    seen: set[tuple[int, int, int]] = set()
    for (v, w), j, s in zip(tiling.edges, grid, sign):
        if int(v) in joint_class and int(w) in joint_class:
            a, b = (int(v), int(w)) if s > 0 else (int(w), int(v))
            seen.add((joint_class[a], joint_class[b], int(j)))
    edges = [EdgeClass(a, b, j) for a, b, j in sorted(seen)]
    return SymbolMatrix(tiling.spec.r, tiling.spec.edge_vectors, classes, edges, joint_class)


def class_stabilisation(small: SymbolMatrix, large: SymbolMatrix) -> bool:
    """True when the larger patch adds no new star or bar class."""
    same_stars = {c.star for c in small.classes} == {c.star for c in large.classes}
    return same_stars and small.edge_keys == large.edge_keys


def interior_residual(tiling: Tiling, u) -> float:
    """Flex residual over bars whose endpoints are both interior, scaled by max |u|."""
    u = np.asarray(u)
    mask = tiling.interior_edge_mask
    e = tiling.edges[mask]
    scale = float(np.max(np.abs(u[tiling.interior_joint_mask]))) if mask.any() else 0.0
    if scale == 0.0:
        return 0.0
    d = tiling.positions[e[:, 0]] - tiling.positions[e[:, 1]]
    val = np.abs(np.einsum("ij,ij->i", u[e[:, 0]] - u[e[:, 1]], d)) / np.linalg.norm(d, axis=1)
    return float(val.max() / scale)


# ------------------------------------------------------------- spectrum

@dataclass(frozen=True)
class SpectrumPoint:
    gammas: tuple[float, ...]
    min_sv: float
    kernel_dim: int
    gap_ratio: float

    def flagged(self) -> bool:
        return self.kernel_dim > 0


@dataclass
class SpectrumSample:
    points: list[SpectrumPoint]
    provisional: bool
    rel_threshold: float = 1e-8

    @property
    def flagged(self) -> list[SpectrumPoint]:
        return [p for p in self.points if p.kernel_dim > 0]


def _rank_data(s: np.ndarray, cols: int, rel: float):
    norm = float(s[0]) if len(s) else 0.0
    thr = rel * norm
    rank = int(np.count_nonzero(s > thr))
    kdim = cols - rank
    full = np.zeros(cols)
    full[:len(s)] = s
    min_sv = float(full[-1])
    if rank == 0 or rank == cols:
        gap = math.inf
    else:
        gap = math.inf if full[rank] == 0 else float(full[rank - 1] / full[rank])
    return min_sv, kdim, gap


def evaluate_spectrum(sym: SymbolMatrix, gammas, rel_threshold: float = 1e-8,
                      batch: int = 256, threads: int = 1) -> list[SpectrumPoint]:
    gammas = np.atleast_2d(np.asarray(gammas, dtype=float))
    cols = sym.shape[1]
    chunks = [gammas[k:k + batch] for k in range(0, len(gammas), batch)]

    def run(chunk: np.ndarray) -> list[SpectrumPoint]:
        mats = sym.evaluate_many(np.exp(2j * np.pi * chunk))
        svs = np.linalg.svd(mats, compute_uv=False)
        out = []
        for g, s in zip(chunk, svs):
            m, k, gap = _rank_data(s, cols, rel_threshold)
            out.append(SpectrumPoint(tuple(float(x) for x in g), m, k, gap))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return [p for part in parts for p in part]


def torus_grid(n: int) -> np.ndarray:
    t = np.arange(n) / n
    a, b = np.meshgrid(t, t, indexing="ij")
    return np.stack([a.ravel(), b.ravel()], axis=1)


def circle_samples(r: int, i: int, n: int) -> np.ndarray:
    g = np.zeros((n, r))
    g[:, i] = np.arange(n) / n
    return g


def generic_samples(r: int, n: int, rng: np.random.Generator, avoid: float = 1e-3) -> np.ndarray:
    """Uniform multiphases with every coordinate at least ``avoid`` turns from 0."""
    out = np.empty((0, r))
    while len(out) < n:
        g = rng.random((2 * n, r))
        dist = np.minimum(g, 1 - g)
        out = np.concatenate([out, g[(dist >= avoid).all(axis=1)]])
    return out[:n]


def spectrum_sample(sym: SymbolMatrix, slice_: str = "circles", n: int = 256, generic: int = 0,
                    seed: int = 0, rel_threshold: float = 1e-8, threads: int = 1) -> SpectrumSample:
    """``slice_`` is ``"torus"`` (r = 2 only), ``"circles"`` (every coordinate
    circle) or ``"circle:<i>"`` (0-based).  ``generic`` adds random points."""
    r = sym.r
    if slice_ == "torus":
        if r != 2:
            raise InputError("the full torus grid is only sampled for two grids")
        pts = torus_grid(n)
    elif slice_ == "circles":
        pts = np.concatenate([circle_samples(r, i, n) for i in range(r)])
    elif slice_.startswith("circle:"):
        i = int(slice_.split(":")[1])
        if not 0 <= i < r:
            raise InputError(f"grid id {i} out of range")
        pts = circle_samples(r, i, n)
    else:
        raise InputError(f"unknown slice {slice_!r}")
    if generic:
        pts = np.concatenate([pts, generic_samples(r, generic, np.random.default_rng(seed))])
    points = evaluate_spectrum(sym, pts, rel_threshold, threads=threads)
    return SpectrumSample(points, provisional=sym.stable is not True, rel_threshold=rel_threshold)


# ----------------------------------------------------------- band modes

def band_vector(tiling: Tiling, i: int) -> np.ndarray:
    """Unit vector along the grid-``i`` lines, orthogonal to ``e_i``."""
    e = tiling.spec.edge_vectors[i]
    e = e / np.linalg.norm(e)
    return np.array([-e[1], e[0]])


def band_zero_mode(tiling: Tiling, i: int, lam: complex) -> np.ndarray:
    """``u(p_m) = lam**m_i * t_i``: every band of grid ``i`` moves rigidly along t_i."""
    if tiling.index is None or tiling.spec is None:
        raise InputError("tiling carries no index vectors")
    if not 0 <= i < tiling.spec.r:
        raise InputError(f"grid id {i} out of range")
    lam = complex(lam)
    if abs(abs(lam) - 1.0) > 1e-12:
        raise InputError("lambda must have unit modulus")
    phase = np.exp(1j * np.angle(lam) * tiling.index[:, i])
    return phase[:, None] * band_vector(tiling, i)[None, :]


def band_class_vector(sym: SymbolMatrix, tiling: Tiling, i: int) -> np.ndarray:
    """Class form of the band mode: ``b_a = t_i`` for every star class."""
    return np.tile(band_vector(tiling, i).astype(complex), len(sym.classes))


# ------------------------------------------------------ square lattice

@dataclass(frozen=True)
class GridSymbolReference:
    """Closed-form symbol of the unit square lattice with edges e_1, e_2."""

    @staticmethod
    def evaluate(w1: complex, w2: complex) -> np.ndarray:
        return np.array([[1 - w1, 0], [0, 1 - w2]], dtype=complex)

    @staticmethod
    def degenerate(w1: complex, w2: complex, tol: float = 1e-12) -> bool:
        return abs(1 - w1) <= tol or abs(1 - w2) <= tol

    @staticmethod
    def kernel(w1: complex, w2: complex, tol: float = 1e-12) -> list[np.ndarray]:
        out = []
        if abs(1 - w1) <= tol:
            out.append(np.array([1, 0], dtype=complex))
        if abs(1 - w2) <= tol:
            out.append(np.array([0, 1], dtype=complex))
        return out


def grid_symbol_reference() -> GridSymbolReference:
    return GridSymbolReference()
