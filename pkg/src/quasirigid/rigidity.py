"""Rigidity-matrix oracle for (braced) bar-joint frameworks in the plane."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import GeometryError, IllConditionedError, InputError
from .tiling import Tiling

GAP_MIN = 1e3


@dataclass(frozen=True)
class Framework:
    positions: np.ndarray
    bars: np.ndarray
    braces: tuple[int, ...] = ()

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        bars = np.asarray(self.bars, dtype=np.int64).reshape(-1, 2)
        if len(bars):
            if bars.min() < 0 or bars.max() >= len(pos):
                raise InputError("bar refers to unknown joint")
            if np.any(bars[:, 0] == bars[:, 1]):
                raise GeometryError("bar with identical endpoints")
            keys = np.sort(bars, axis=1)
            if len(np.unique(keys, axis=0)) != len(keys):
                raise GeometryError("repeated bar")
            length = np.linalg.norm(pos[bars[:, 0]] - pos[bars[:, 1]], axis=1)
            if np.any(length <= 1e-12):
                raise GeometryError(f"zero-length bar {tuple(bars[np.argmin(length)])}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "bars", bars)

    @property
    def n_joints(self) -> int:
        return len(self.positions)

    @classmethod
    def from_tiling(cls, tiling: Tiling, braced: Iterable[int] = ()) -> "Framework":
        braced = tuple(sorted(set(int(t) for t in braced)))
        if braced and (braced[0] < 0 or braced[-1] >= tiling.n_tiles):
            raise InputError("braced tile outside the tiling")
        bars = [tiling.edges]
        if braced:
            bars.append(np.array([brace_bar(tiling, t) for t in braced]))
        return cls(tiling.positions, np.concatenate(bars), braced)


def brace_bar(tiling: Tiling, tile: int) -> tuple[int, int]:
    """Diagonal from the tile's lowest-id joint to the opposite joint."""
    js = tiling.tiles[tile]
    s = int(np.argmin(js))
    return int(js[s]), int(js[(s + 2) % 4])


def assemble_rigidity_matrix(fw: Framework) -> np.ndarray:
    n, B = fw.n_joints, len(fw.bars)
    M = np.zeros((B, 2 * n))
    v, w = fw.bars[:, 0], fw.bars[:, 1]
    d = fw.positions[v] - fw.positions[w]
    rows = np.arange(B)
    M[rows, 2 * v] = d[:, 0]
    M[rows, 2 * v + 1] = d[:, 1]
    M[rows, 2 * w] = -d[:, 0]
    M[rows, 2 * w + 1] = -d[:, 1]
    return M


@dataclass
class FlexSpace:
    dimension: int
    singular_values: np.ndarray
    threshold: float
    gap_ratio: float
    basis: np.ndarray | None = None  # (2n, dimension), orthonormal columns

    @property
    def ill_conditioned(self) -> bool:
        return self.gap_ratio < GAP_MIN

    def fields(self) -> list[np.ndarray]:
        if self.basis is None:
            raise InputError("flex space was computed without a basis")
        return [self.basis[:, k].reshape(-1, 2) for k in range(self.dimension)]

    def certified_dimension(self) -> int:
        if self.ill_conditioned:
            raise IllConditionedError(
                f"spectral gap {self.gap_ratio:.3g} below {GAP_MIN:g} at dimension {self.dimension}")
        return self.dimension


def rank_decision(s: np.ndarray, shape: tuple[int, int], tol: float | None = None):
    """Numerical rank with relative threshold and the gap ratio around it."""
    smax = float(s[0]) if len(s) else 0.0
    thr = tol if tol is not None else 1e-10 * smax * max(shape)
    rank = int(np.count_nonzero(s > thr))
    if rank == 0:
        gap = np.inf
    else:
        discarded = float(s[rank]) if rank < len(s) else 0.0
        gap = np.inf if discarded == 0.0 else float(s[rank - 1]) / discarded
    return rank, thr, gap


def flex_space(fw: Framework, tol: float | None = None, basis: bool = True) -> FlexSpace:
    M = assemble_rigidity_matrix(fw)
    ncols = M.shape[1]
    if len(M) == 0:
        return FlexSpace(ncols, np.zeros(0), 0.0, np.inf, np.eye(ncols) if basis else None)
    if basis:
        _, s, vt = np.linalg.svd(M, full_matrices=True)
    else:
        s = np.linalg.svd(M, compute_uv=False)
    rank, thr, gap = rank_decision(s, M.shape, tol)
    kernel = vt[rank:].T.copy() if basis else None
    return FlexSpace(ncols - rank, s, thr, gap, kernel)


def is_infinitesimally_rigid(fw: Framework, tol: float | None = None) -> bool:
    if fw.n_joints < 2:
        raise GeometryError("need at least two joints")
    centred = fw.positions - fw.positions.mean(axis=0)
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[-1] <= 1e-9 * max(1.0, sv[0]):
        raise GeometryError("joints are collinear; the rigid-motion space is not 3-dimensional")
    fs = flex_space(fw, tol, basis=False)
    return fs.certified_dimension() == 3


def flex_residual(fw: Framework, u) -> float:
    """Max over bars of |<u_v - u_w, p_v - p_w>| / (|p_v - p_w| * max_j |u_j|)."""
    u = np.asarray(u).reshape(-1, 2)
    if u.shape[0] != fw.n_joints:
        raise InputError("velocity field does not match the framework joints")
    scale = float(np.max(np.linalg.norm(u, axis=1))) if len(u) else 0.0
    if scale == 0.0 or len(fw.bars) == 0:
        return 0.0
    v, w = fw.bars[:, 0], fw.bars[:, 1]
    d = fw.positions[v] - fw.positions[w]
    val = np.abs(np.einsum("ij,ij->i", u[v] - u[w], d)) / np.linalg.norm(d, axis=1)
    return float(val.max() / scale)


def translation_field(n: int, vector) -> np.ndarray:
    return np.tile(np.asarray(vector, dtype=float), (n, 1))


def rotation_field(positions, centre=(0.0, 0.0)) -> np.ndarray:
    rel = np.asarray(positions, dtype=float) - np.asarray(centre, dtype=float)
    return np.stack([-rel[:, 1], rel[:, 0]], axis=1)


# ------------------------------------------------------------- JSON io

def field_to_json(u) -> dict:
    u = np.asarray(u)
    out = {}
    for n, vec in enumerate(u.reshape(-1, 2)):
        if np.iscomplexobj(u):
            out[str(n)] = [[float(c.real), float(c.imag)] for c in vec]
        else:
            out[str(n)] = [float(vec[0]), float(vec[1])]
    return {"fields": out}


def field_from_json(doc: dict, n_joints: int) -> np.ndarray:
    try:
        entries = doc["fields"]
        complex_ = any(isinstance(v[0], (list, tuple)) for v in entries.values())
        u = np.zeros((n_joints, 2), dtype=complex if complex_ else float)
        for key, vec in entries.items():
            j = int(key)
            if not 0 <= j < n_joints:
                raise InputError(f"field given for unknown joint {j}")
            if complex_:
                u[j] = [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c) for c in vec]
            else:
                u[j] = [float(vec[0]), float(vec[1])]
        if len(entries) != n_joints:
            raise InputError("velocity field must cover every joint")
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"malformed velocity field: {exc}") from exc
    return u
