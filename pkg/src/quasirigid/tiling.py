"""Finite parallelogram tiling patches.

Joints are numbered ``0..n-1``; tiles are 4-tuples of joint ids in
counter-clockwise order, so slots 0/2 and 1/3 hold the two pairs of
parallel edges ("sides" 0 and 1 of the tile).  A ribbon is a maximal
chain of tiles glued along edges of one side class.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (ClosureEscapeError, GeometryError, InputError, InvalidTileError,
                     StructureError)

POS_TOL = 1e-9


@dataclass(frozen=True)
class Ribbon:
    id: int
    tiles: tuple[int, ...]
    direction: int
    edges: tuple[int, ...]
    label: tuple[int, int] | None = None

    def __len__(self) -> int:
        return len(self.tiles)


@dataclass(frozen=True)
class Patch:
    tiles: frozenset[int]
    boundary_edges: tuple[int, ...]
    simply_connected: bool
    maximal: bool


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class Tiling:
    """Immutable finite parallelogram tiling.

    Parameters
    ----------
    positions : (n, 2) array
    tiles : (T, 4) int array, cyclic joint order (either orientation; stored CCW)
    index : (n, r) int array, optional
        Multigrid index vector of each joint.
    grid_pair, line_indices : (T, 2) int arrays, optional
        Multigrid labels ``T(i, j, k, l)`` with ``i < j``.
    """

    def __init__(self, positions, tiles, index=None, grid_pair=None, line_indices=None,
                 spec=None, validate: bool = True):
        self.positions = np.array(positions, dtype=float).reshape(-1, 2)
        tiles = np.array(tiles, dtype=np.int64).reshape(-1, 4)
        self.index = None if index is None else np.array(index, dtype=np.int64)
        self.grid_pair = None if grid_pair is None else np.array(grid_pair, dtype=np.int64).reshape(-1, 2)
        self.line_indices = None if line_indices is None else np.array(line_indices, dtype=np.int64).reshape(-1, 2)
        self.spec = spec
        n = len(self.positions)
        if len(tiles) == 0:
            raise InputError("tiling has no tiles")
        if tiles.min() < 0 or tiles.max() >= n:
            raise InputError("tile refers to unknown joint")
        if self.index is not None and self.index.shape[0] != n:
            raise InputError("index array does not match joints")
        for arr, name in ((self.grid_pair, "grid_pair"), (self.line_indices, "line_indices")):
            if arr is not None and len(arr) != len(tiles):
                raise InputError(f"{name} does not match tiles")
        p = self.positions[tiles]
        area = _cross(p[:, 1] - p[:, 0], p[:, 3] - p[:, 0])
        flip = area < 0
        tiles[flip] = tiles[flip][:, ::-1]
        self.tiles = tiles
        for arr in (self.positions, self.tiles, self.index, self.grid_pair, self.line_indices):
            if arr is not None:
                arr.setflags(write=False)
        if validate:
            self.validate()

    # ------------------------------------------------------------------ basics
    @property
    def n_joints(self) -> int:
        return len(self.positions)

    @property
    def n_tiles(self) -> int:
        return len(self.tiles)

    @property
    def has_labels(self) -> bool:
        return self.grid_pair is not None and self.line_indices is not None

    @cached_property
    def _edge_data(self):
        slots = np.stack([self.tiles, np.roll(self.tiles, -1, axis=1)], axis=2)  # (T, 4, 2)
        keys = np.sort(slots.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        tile_edges = inverse.reshape(-1, 4)
        edge_tiles = np.full((len(edges), 2), -1, dtype=np.int64)
        edge_slots = np.full((len(edges), 2), -1, dtype=np.int64)
        count = np.zeros(len(edges), dtype=np.int64)
        for t in range(self.n_tiles):
            for s in range(4):
                e = tile_edges[t, s]
                if count[e] >= 2:
                    raise InvalidTileError(t, f"edge {tuple(edges[e])} shared by more than two tiles")
                edge_tiles[e, count[e]] = t
                edge_slots[e, count[e]] = s
                count[e] += 1
        return edges, tile_edges, edge_tiles, edge_slots, count

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def tile_edges(self) -> np.ndarray:
        return self._edge_data[1]

    @property
    def edge_tiles(self) -> np.ndarray:
        return self._edge_data[2]

    @property
    def edge_tile_count(self) -> np.ndarray:
        return self._edge_data[4]

    @cached_property
    def boundary_edge_mask(self) -> np.ndarray:
        return self.edge_tile_count == 1

    @cached_property
    def boundary_joint_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_joints, dtype=bool)
        mask[self.edges[self.boundary_edge_mask].ravel()] = True
        return mask

    @cached_property
    def interior_joint_mask(self) -> np.ndarray:
        used = np.zeros(self.n_joints, dtype=bool)
        used[self.tiles.ravel()] = True
        return used & ~self.boundary_joint_mask

    @cached_property
    def interior_edge_mask(self) -> np.ndarray:
        """Edges whose endpoints are both interior joints."""
        return self.interior_joint_mask[self.edges].all(axis=1)

    def tile_centroids(self) -> np.ndarray:
        return self.positions[self.tiles].mean(axis=1)

    def tile_diameters(self) -> np.ndarray:
        p = self.positions[self.tiles]
        return np.maximum(np.linalg.norm(p[:, 2] - p[:, 0], axis=1),
                          np.linalg.norm(p[:, 3] - p[:, 1], axis=1))

    def tile_areas(self) -> np.ndarray:
        p = self.positions[self.tiles]
        return _cross(p[:, 1] - p[:, 0], p[:, 3] - p[:, 0])

    def tile_angles(self) -> np.ndarray:
        """Acute interior angle of every tile, in [0, pi/2]."""
        p = self.positions[self.tiles]
        a, b = p[:, 1] - p[:, 0], p[:, 3] - p[:, 0]
        cos = np.abs(np.einsum("ij,ij->i", a, b)) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        return np.arccos(np.clip(cos, 0.0, 1.0))

    # ------------------------------------------------------ direction classes
    @cached_property
    def _direction_data(self):
        """Direction class and sign of every edge, plus canonical class vectors.

        The sign is +1 when the edge stored as ``(a, b)`` with ``a < b`` points along
        the canonical vector.  With index vectors the class is the coordinate that
        changes along the edge and the canonical vector points towards increasing index.
        """
        edges = self.edges
        vec = self.positions[edges[:, 1]] - self.positions[edges[:, 0]]
        if self.index is not None:
            diff = self.index[edges[:, 1]] - self.index[edges[:, 0]]
            nz = np.count_nonzero(diff, axis=1)
            bad = np.nonzero((nz != 1) | (np.abs(diff).sum(axis=1) != 1))[0]
            if len(bad):
                a, b = edges[bad[0]]
                raise GeometryError(f"edge ({a}, {b}) does not change exactly one index by 1")
            cls = np.argmax(np.abs(diff), axis=1)
            sign = diff[np.arange(len(edges)), cls]
            r = self.index.shape[1]
            canon = np.zeros((r, 2))
            for j in range(r):
                sel = cls == j
                if sel.any():
                    canon[j] = (vec[sel] * sign[sel, None]).mean(axis=0)
            return cls, sign, canon
        # geometric clustering up to sign
        flip = (vec[:, 1] < -POS_TOL) | ((np.abs(vec[:, 1]) <= POS_TOL) & (vec[:, 0] < 0))
        sign = np.where(flip, -1, 1)
        canon_vec = vec * sign[:, None]
        keys = np.round(canon_vec / 1e-6).astype(np.int64)
        uniq, cls = np.unique(keys, axis=0, return_inverse=True)
        canon = np.array([canon_vec[cls == c].mean(axis=0) for c in range(len(uniq))])
        return cls.ravel(), sign, canon

    @property
    def edge_class(self) -> np.ndarray:
        return self._direction_data[0]

    @property
    def edge_sign(self) -> np.ndarray:
        return self._direction_data[1]

    @property
    def direction_vectors(self) -> np.ndarray:
        return self._direction_data[2]

    def shear_vector(self, cls: int) -> np.ndarray:
        """Unit vector orthogonal to direction class ``cls`` (its CCW quarter turn)."""
        v = self.direction_vectors[cls]
        v = v / np.linalg.norm(v)
        return np.array([-v[1], v[0]])

    # ---------------------------------------------------------------- checks
    def validate(self) -> None:
        p = self.positions[self.tiles]
        for t in range(self.n_tiles):
            if len(set(self.tiles[t].tolist())) != 4:
                raise InvalidTileError(t, "joints are not distinct")
        scale = max(1.0, float(np.abs(self.positions).max()))
        area = self.tile_areas()
        bad = np.nonzero(area <= 1e-9 * scale)[0]
        if len(bad):
            raise InvalidTileError(int(bad[0]), "degenerate (zero-area) tile")
        skew = np.linalg.norm(p[:, 0] + p[:, 2] - p[:, 1] - p[:, 3], axis=1)
        bad = np.nonzero(skew > 1e-7 * scale)[0]
        if len(bad):
            raise InvalidTileError(int(bad[0]), "not a parallelogram")
        _ = self._edge_data
        if not self.tiles_connected(range(self.n_tiles)):
            raise GeometryError("tile adjacency graph is not connected")

    def tile_adjacency(self):
        et = self.edge_tiles
        shared = et[:, 1] >= 0
        a, b = et[shared, 0], et[shared, 1]
        n = self.n_tiles
        return coo_matrix((np.ones(2 * len(a)), (np.r_[a, b], np.r_[b, a])), shape=(n, n)).tocsr()

    def tiles_connected(self, tile_ids: Iterable[int]) -> bool:
        ids = np.fromiter(tile_ids, dtype=np.int64)
        if len(ids) == 0:
            return False
        sub = self.tile_adjacency()[ids][:, ids]
        return connected_components(sub, directed=False)[0] == 1

    # --------------------------------------------------------------- ribbons
    @cached_property
    def ribbons(self) -> tuple[Ribbon, ...]:
        return tuple(self._extract_ribbons()[0])

    @cached_property
    def tile_ribbons(self) -> np.ndarray:
        """(T, 2) ribbon id through side 0 and side 1 of each tile."""
        return self._extract_ribbons()[1]

    def _extract_ribbons(self):
        if hasattr(self, "_ribbon_cache"):
            return self._ribbon_cache
        T = self.n_tiles
        et, es = self._edge_data[2], self._edge_data[3]
        shared = et[:, 1] >= 0
        u = 2 * et[shared, 0] + es[shared, 0] % 2
        v = 2 * et[shared, 1] + es[shared, 1] % 2
        graph = coo_matrix((np.ones(len(u)), (u, v)), shape=(2 * T, 2 * T))
        ncomp, labels = connected_components(graph, directed=False)
        members: list[list[int]] = [[] for _ in range(ncomp)]
        for node in range(2 * T):
            members[labels[node]].append(node)
        tile_edges = self.tile_edges
        cls = self.edge_class
        raw = []
        for comp in range(ncomp):
            nodes = members[comp]
            tiles = [nd // 2 for nd in nodes]
            if len(set(tiles)) != len(tiles):
                raise StructureError(f"ribbon passes twice through tile {tiles[0]}")
            sides = {nd // 2: nd % 2 for nd in nodes}
            edge_ids = sorted({int(tile_edges[t, s]) for t, s in sides.items()}
                              | {int(tile_edges[t, s + 2]) for t, s in sides.items()})
            order = self._ribbon_order(sides, edge_ids)
            first = order[0]
            direction = int(cls[tile_edges[first, sides[first]]])
            label = None
            if self.has_labels:
                i, j = self.grid_pair[first]
                k, l = self.line_indices[first]
                if self.index is not None:
                    label = (int(i), int(k)) if direction == i else (int(j), int(l))
            raw.append((order, sides, direction, tuple(edge_ids), label))
        if all(r[4] is not None for r in raw):
            raw.sort(key=lambda r: r[4])
        else:
            raw.sort(key=lambda r: min(r[0]))
        ribbons = []
        tile_ribbons = np.full((T, 2), -1, dtype=np.int64)
        for rid, (order, sides, direction, edge_ids, label) in enumerate(raw):
            ribbons.append(Ribbon(rid, tuple(order), direction, edge_ids, label))
            for t, s in sides.items():
                tile_ribbons[t, s] = rid
        tile_ribbons.setflags(write=False)
        self._ribbon_cache = (ribbons, tile_ribbons)
        return self._ribbon_cache

    def _ribbon_order(self, sides: dict[int, int], edge_ids: list[int]) -> list[int]:
        et = self.edge_tiles
        nbrs: dict[int, list[int]] = {t: [] for t in sides}
        for e in edge_ids:
            a, b = et[e]
            if b >= 0 and a in sides and b in sides:
                nbrs[int(a)].append(int(b))
                nbrs[int(b)].append(int(a))
        ends = sorted(t for t, n in nbrs.items() if len(n) <= 1)
        if not ends:
            raise StructureError(f"ribbon through tile {min(sides)} closes up on itself")
        order, prev, cur = [ends[0]], -1, ends[0]
        while True:
            nxt = [t for t in nbrs[cur] if t != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            order.append(cur)
        if len(order) != len(sides):
            raise StructureError(f"ribbon through tile {min(sides)} is not a simple path")
        return order

    def ribbon_internal_edges(self, rid: int) -> np.ndarray:
        return np.array(self.ribbons[rid].edges, dtype=np.int64)

    # --------------------------------------------------------------- patches
    def restrict(self, tile_ids: Iterable[int]) -> "Tiling":
        """Sub-tiling on the given tiles; ``parent_joints``/``parent_tiles`` map back."""
        tids = np.array(sorted(set(int(t) for t in tile_ids)), dtype=np.int64)
        joints = np.unique(self.tiles[tids].ravel())
        remap = np.full(self.n_joints, -1, dtype=np.int64)
        remap[joints] = np.arange(len(joints))
        sub = Tiling(
            self.positions[joints], remap[self.tiles[tids]],
            None if self.index is None else self.index[joints],
            None if self.grid_pair is None else self.grid_pair[tids],
            None if self.line_indices is None else self.line_indices[tids],
            spec=self.spec,
        )
        sub.parent_joints = joints
        sub.parent_tiles = tids
        return sub

    def euler_characteristic(self, tile_ids: Iterable[int] | None = None) -> int:
        tids = np.arange(self.n_tiles) if tile_ids is None else np.fromiter(tile_ids, dtype=np.int64)
        V = len(np.unique(self.tiles[tids].ravel()))
        E = len(np.unique(self.tile_edges[tids].ravel()))
        return V - E + len(tids)


# ---------------------------------------------------------------- operations

def extract_ribbons(tiling: Tiling) -> list[Ribbon]:
    return list(tiling.ribbons)


@dataclass
class OverlapReport:
    pair_counts: int
    violations: list[tuple[int, int, tuple[int, ...]]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def ribbon_overlap_check(tiling: Tiling) -> OverlapReport:
    """Every pair of ribbons must share at most one tile."""
    shared: dict[tuple[int, int], list[int]] = {}
    for t, (a, b) in enumerate(tiling.tile_ribbons):
        shared.setdefault((int(min(a, b)), int(max(a, b))), []).append(t)
    bad = [(a, b, tuple(ts)) for (a, b), ts in sorted(shared.items()) if len(ts) > 1]
    return OverlapReport(len(shared), bad)


def _patch_boundary(tiling: Tiling, tiles: set[int]):
    counts: dict[int, int] = {}
    for t in tiles:
        for e in tiling.tile_edges[t]:
            counts[int(e)] = counts.get(int(e), 0) + 1
    bedges = sorted(e for e, c in counts.items() if c == 1)
    bjoints = set(tiling.edges[bedges].ravel().tolist()) if bedges else set()
    return bedges, bjoints, counts


def _simply_connected(tiling: Tiling, tiles: set[int], bedges: list[int], n_edges: int) -> bool:
    if not tiles or not tiling.tiles_connected(tiles):
        return False
    V = len(np.unique(tiling.tiles[list(tiles)].ravel()))
    if V - n_edges + len(tiles) != 1:
        return False
    # boundary must be one simple closed curve
    deg: dict[int, int] = {}
    for e in bedges:
        for v in tiling.edges[e]:
            deg[int(v)] = deg.get(int(v), 0) + 1
    if any(d != 2 for d in deg.values()):
        return False
    verts = sorted(deg)
    pos = {v: n for n, v in enumerate(verts)}
    a = [pos[int(tiling.edges[e, 0])] for e in bedges]
    b = [pos[int(tiling.edges[e, 1])] for e in bedges]
    g = coo_matrix((np.ones(len(a)), (a, b)), shape=(len(verts), len(verts)))
    return connected_components(g, directed=False)[0] == 1


def _outside_candidates(tiling: Tiling, tiles: set[int], bjoints: set[int]) -> list[int]:
    out = []
    near = set()
    for t in tiles:
        for e in tiling.tile_edges[t]:
            for u in tiling.edge_tiles[e]:
                if u >= 0 and u not in tiles:
                    near.add(int(u))
    # tiles touching the boundary only at vertices cannot hold three boundary joints
    for u in sorted(near):
        if sum(int(v) in bjoints for v in tiling.tiles[u]) >= 3:
            out.append(u)
    return out


def make_patch(tiling: Tiling, tile_ids: Iterable[int]) -> Patch:
    tiles = set(int(t) for t in tile_ids)
    if not tiles or min(tiles) < 0 or max(tiles) >= tiling.n_tiles:
        raise InputError("patch tiles must be a nonempty subset of the tiling")
    bedges, bjoints, counts = _patch_boundary(tiling, tiles)
    sc = _simply_connected(tiling, tiles, bedges, len(counts))
    maximal = not _outside_candidates(tiling, tiles, bjoints)
    return Patch(frozenset(tiles), tuple(bedges), sc, maximal)


def maximal_closure(tiling: Tiling, patch: Patch | Iterable[int]) -> Patch:
    """Add outside tiles with at least 3 joints on the patch boundary until none remain."""
    start = set(patch.tiles) if isinstance(patch, Patch) else set(int(t) for t in patch)
    tiles = set(start)
    ambient_boundary = tiling.boundary_joint_mask
    while True:
        _, bjoints, _ = _patch_boundary(tiling, tiles)
        add = _outside_candidates(tiling, tiles, bjoints)
        if not add:
            break
        for t in add:
            if ambient_boundary[tiling.tiles[t]].any():
                raise ClosureEscapeError(
                    f"closure reaches the edge of the ambient tiling at tile {t}; "
                    "use a larger window")
        tiles.update(add)
    result = make_patch(tiling, tiles)
    if not result.simply_connected:
        raise StructureError("closed patch is not simply connected")
    return result


def largest_component(tiling: Tiling, tile_ids: Iterable[int]) -> set[int]:
    ids = np.array(sorted(set(int(t) for t in tile_ids)), dtype=np.int64)
    if len(ids) == 0:
        return set()
    sub = tiling.tile_adjacency()[ids][:, ids]
    n, labels = connected_components(sub, directed=False)
    sizes = np.bincount(labels, minlength=n)
    best = int(np.argmax(sizes))
    return set(ids[labels == best].tolist())


# -------------------------------------------------------------------- JSON io

def export_tiling(tiling: Tiling) -> dict:
    joints = []
    for n in range(tiling.n_joints):
        joints.append({
            "id": n,
            "pos": [float(v) for v in tiling.positions[n]],
            "index": None if tiling.index is None else [int(v) for v in tiling.index[n]],
        })
    tiles = []
    for t in range(tiling.n_tiles):
        tiles.append({
            "joints": [int(v) for v in tiling.tiles[t]],
            "grid_pair": None if tiling.grid_pair is None else [int(v) for v in tiling.grid_pair[t]],
            "line_indices": None if tiling.line_indices is None else [int(v) for v in tiling.line_indices[t]],
        })
    doc = {"joints": joints, "edges": [[int(a), int(b)] for a, b in tiling.edges], "tiles": tiles}
    if tiling.spec is not None:
        doc["multigrid"] = tiling.spec.to_dict()
    return doc


def import_tiling(doc: dict) -> Tiling:
    from .geometry import MultigridSpec

    if not isinstance(doc, dict) or "joints" not in doc or "tiles" not in doc:
        raise InputError("tiling document needs 'joints' and 'tiles'")
    try:
        jdocs = sorted(doc["joints"], key=lambda j: int(j["id"]))
        ids = [int(j["id"]) for j in jdocs]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate joint id")
        pos_of = {jid: n for n, jid in enumerate(ids)}
        positions = [[float(x) for x in j["pos"]] for j in jdocs]
        if any(len(p) != 2 for p in positions):
            raise InputError("joint positions must be 2-vectors")
        idx = [j.get("index") for j in jdocs]
        if all(i is not None for i in idx):
            index = np.array(idx, dtype=np.int64)
        elif any(i is not None for i in idx):
            raise InputError("index vectors must be given for all joints or none")
        else:
            index = None
        tiles, gp, li = [], [], []
        for t, td in enumerate(doc["tiles"]):
            js = td["joints"]
            if len(js) != 4:
                raise InvalidTileError(t, "a tile needs exactly 4 joints")
            try:
                tiles.append([pos_of[int(v)] for v in js])
            except KeyError as exc:
                raise InvalidTileError(t, f"unknown joint {exc.args[0]}") from None
            gp.append(td.get("grid_pair"))
            li.append(td.get("line_indices"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed tiling document: {exc}") from exc
    grid_pair = np.array(gp, dtype=np.int64) if all(g is not None for g in gp) else None
    line_indices = np.array(li, dtype=np.int64) if all(x is not None for x in li) else None
    spec = MultigridSpec.from_dict(doc["multigrid"]) if doc.get("multigrid") else None
    tiling = Tiling(positions, tiles, index, grid_pair, line_indices, spec=spec)
    if "edges" in doc and doc["edges"] is not None:
        given = {tuple(sorted((pos_of[int(a)], pos_of[int(b)]))) for a, b in doc["edges"]}
        derived = {tuple(e) for e in tiling.edges.tolist()}
        if given != derived:
            raise InputError("edge list does not match the tile boundaries")
    return tiling


def canonical(doc: dict) -> dict:
    return export_tiling(import_tiling(doc))
