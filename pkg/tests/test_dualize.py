from __future__ import annotations

import math

import numpy as np
import pytest

from oracles import nudged_corner_indices
from quasirigid.dualize import (ambient_intersection_points, dualize, square_patch,
                                verify_dual_consistency, working_patch)
from quasirigid.errors import GeometryError, InputError
from quasirigid.geometry import pentagrid_preset, square_grid_preset
from quasirigid.tiling import Tiling


def test_square_patch_shape():
    t = square_patch(2, 3)
    assert (t.n_tiles, t.n_joints) == (6, 12)
    assert len(t.edges) == 2 * 4 + 3 * 3
    assert verify_dual_consistency(t).ok


def test_square_grid_dual_is_unit_squares():
    t = dualize(square_grid_preset((0.5, 0.5)), 4.0)
    assert np.allclose(t.tile_areas(), 1.0)
    assert verify_dual_consistency(t).ok


def test_tile_corners_match_nudged_samples(penta_wp):
    # oracle: sample the four faces just off each crossing
    amb = penta_wp.ambient
    pts = ambient_intersection_points(amb)
    for t in range(0, amb.n_tiles, 7):
        i, j = amb.grid_pair[t]
        want = nudged_corner_indices(amb.spec, pts[t], i, j)
        got = {tuple(int(v) for v in amb.index[q]) for q in amb.tiles[t]}
        assert got == want


def test_positions_are_index_combinations(penta_wp):
    amb = penta_wp.ambient
    assert np.allclose(amb.positions, amb.index @ amb.spec.edge_vectors)


def test_pentagrid_window8_consistent(penta_spec):
    t = dualize(penta_spec, 8.0)
    rep = verify_dual_consistency(t)
    assert rep.ok
    angles = np.round(np.degrees(t.tile_angles()), 6)
    assert set(angles) == {36.0, 72.0}


def test_tetragrid_tiles_are_squares_and_rhombs(tetra_wp):
    angles = np.round(np.degrees(tetra_wp.ambient.tile_angles()), 6)
    assert set(angles) == {45.0, 90.0}


def test_corrupted_joint_names_tile(penta):
    pos = penta.positions.copy()
    victim = int(np.nonzero(penta.interior_joint_mask)[0][0])
    pos[victim] += (0.05, 0.0)
    bad = Tiling(pos, penta.tiles, penta.index, penta.grid_pair, penta.line_indices,
                 spec=penta.spec, validate=False)
    rep = verify_dual_consistency(bad)
    assert not rep.ok
    hit = set(np.nonzero((penta.tiles == victim).any(axis=1))[0])
    assert set(rep.edge_vector_errors) == hit


def test_tile_count_grows_with_window(penta_spec):
    assert dualize(penta_spec, 4.0).n_tiles < dualize(penta_spec, 8.0).n_tiles


def test_offset_shift_by_period_translates_tiling():
    gam = [0.1, 0.15, 0.2, 0.25, -0.7]
    shifted = list(gam)
    shifted[0] += 1.0
    a = dualize(pentagrid_preset(gam, normal_offsets=True), 7.0)
    b = dualize(pentagrid_preset(shifted, normal_offsets=True, tol=2.0), 7.0)
    assert a.n_tiles == b.n_tiles
    e0 = a.spec.edge_vectors[0]
    pa = np.round(a.positions, 9)
    hits = [s for s in (e0, -e0)
            if set(map(tuple, pa)) == set(map(tuple, np.round(b.positions + s, 9)))]
    assert len(hits) == 1

    def edge_multiset(t):
        d = t.positions[t.edges[:, 1]] - t.positions[t.edges[:, 0]]
        return sorted(map(tuple, np.round(d, 9)))

    assert edge_multiset(a) == edge_multiset(b)


def test_working_patch_is_maximal_and_simply_connected(penta_wp):
    assert penta_wp.patch.simply_connected and penta_wp.patch.maximal
    assert penta_wp.tiling.n_tiles == len(penta_wp.patch.tiles)


def test_bad_window_rejected(penta_spec):
    with pytest.raises(InputError):
        dualize(penta_spec, -1.0)
    with pytest.raises(InputError):
        square_patch(0, 2)


def test_small_window_closure_escapes(penta_spec):
    with pytest.raises(GeometryError):
        working_patch(penta_spec, 3)
