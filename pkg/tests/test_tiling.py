from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasirigid.dualize import square_patch
from quasirigid.errors import GeometryError, InputError, InvalidTileError
from quasirigid.tiling import (Tiling, export_tiling, import_tiling, make_patch,
                               maximal_closure, ribbon_overlap_check)


def test_square_ribbons_are_rows_and_columns():
    t = square_patch(3, 2)
    sizes = sorted(len(r) for r in t.ribbons)
    assert sizes == [2, 2, 2, 3, 3]


def test_ribbons_match_line_labels(penta, tetra):
    # oracle: in a maximal patch each grid line crossing the patch is one ribbon
    for t in (penta, tetra):
        groups = {}
        for n, ((i, j), (k, l)) in enumerate(zip(t.grid_pair, t.line_indices)):
            groups.setdefault((int(i), int(k)), set()).add(n)
            groups.setdefault((int(j), int(l)), set()).add(n)
        got = {frozenset(r.tiles) for r in t.ribbons}
        assert got == {frozenset(v) for v in groups.values()}


def test_ribbon_tiles_are_consecutive_neighbours(penta):
    adj = penta.tile_adjacency()
    for r in penta.ribbons:
        for a, b in zip(r.tiles, r.tiles[1:]):
            assert b in adj.indices[adj.indptr[a]:adj.indptr[a + 1]]


def test_each_tile_on_two_ribbons(tetra):
    tr = tetra.tile_ribbons
    assert tr.shape == (tetra.n_tiles, 2)
    assert np.all(tr[:, 0] != tr[:, 1])


def test_two_ribbon_lemma(penta, tetra):
    for t in (penta, tetra, square_patch(4, 5)):
        assert ribbon_overlap_check(t).ok


def test_euler_characteristic_of_square():
    t = square_patch(3, 3)
    assert t.euler_characteristic() == 1


def test_annulus_is_not_simply_connected():
    t = square_patch(3, 3)
    ring = [n for n in range(9) if n != 4]
    patch = make_patch(t, ring)
    assert not patch.simply_connected


def test_maximal_closure_fills_bounding_box():
    t = square_patch(6, 6)
    # squares (2,2) and (3,3) touch at a corner; the closure adds the other two
    patch = maximal_closure(t, [7, 14])
    assert patch.simply_connected and patch.maximal
    assert set(patch.tiles) == {7, 8, 13, 14}


def test_closure_escape_detected():
    from quasirigid.errors import ClosureEscapeError
    with pytest.raises(ClosureEscapeError):
        maximal_closure(square_patch(4, 4), [0, 5])


def test_restrict_keeps_parent_ids(penta_wp):
    t = penta_wp.tiling
    amb = penta_wp.ambient
    assert np.allclose(t.positions, amb.positions[t.parent_joints])
    assert np.array_equal(amb.tiles[t.parent_tiles], t.parent_joints[t.tiles])


def test_json_roundtrip(tetra):
    doc = export_tiling(tetra)
    back = import_tiling(json.loads(json.dumps(doc)))
    assert export_tiling(back) == doc
    assert len(back.ribbons) == len(tetra.ribbons)


def test_import_rejects_bad_documents(tetra):
    doc = export_tiling(tetra)
    with pytest.raises(InputError):
        import_tiling({"joints": []})
    broken = json.loads(json.dumps(doc))
    broken["tiles"][0]["joints"] = broken["tiles"][0]["joints"][:3]
    with pytest.raises(InvalidTileError):
        import_tiling(broken)
    broken = json.loads(json.dumps(doc))
    broken["edges"] = broken["edges"][1:]
    with pytest.raises(InputError):
        import_tiling(broken)


def test_non_parallelogram_rejected():
    with pytest.raises(GeometryError):
        Tiling([[0, 0], [1, 0], [1.3, 1], [0, 1]], [[0, 1, 2, 3]])


def test_unlabelled_tiling_gets_geometric_classes():
    t = square_patch(2, 2)
    plain = Tiling(t.positions, t.tiles)
    assert len(plain.ribbons) == 4
    assert len(plain.direction_vectors) == 2


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6))
def test_square_counts(m, n):
    t = square_patch(m, n)
    assert len(t.ribbons) == m + n
    assert t.interior_joint_mask.sum() == (m - 1) * (n - 1)
