from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import exact_rank, exact_rigidity_rows
from quasirigid.dualize import square_patch
from quasirigid.errors import GeometryError, IllConditionedError, InputError
from quasirigid.rigidity import (FlexSpace, Framework, assemble_rigidity_matrix, brace_bar,
                                 field_from_json, field_to_json, flex_residual, flex_space,
                                 is_infinitesimally_rigid, rank_decision, rotation_field,
                                 translation_field)


def exact_dim(tiling, braced=()):
    fw = Framework.from_tiling(tiling, braced)
    return 2 * fw.n_joints - exact_rank(exact_rigidity_rows(fw.positions, fw.bars))


@pytest.mark.parametrize("m,n", [(1, 1), (2, 2), (2, 3), (3, 3)])
def test_square_dimension_against_exact_rank(m, n):
    t = square_patch(m, n)
    assert flex_space(Framework.from_tiling(t)).dimension == exact_dim(t) == m + n + 2


def test_braced_square_is_rigid():
    t = square_patch(1, 1)
    fw = Framework.from_tiling(t, [0])
    assert flex_space(fw).dimension == 3
    assert is_infinitesimally_rigid(fw)


def test_bolker_crapo_spanning_tree():
    # tiles (k, l) of a 3x3 grid, tile id = 3 (k - 1) + (l - 1); the braced pairs
    # (c1,r1) (c1,r2) (c2,r2) (c2,r3) (c3,r3) form a path through all six ribbons
    t = square_patch(3, 3)
    braced = [0, 1, 4, 5, 8]
    assert exact_dim(t, braced) == 3
    assert flex_space(Framework.from_tiling(t, braced)).dimension == 3


def test_diagonal_braces_two_components():
    t = square_patch(2, 2)
    assert flex_space(Framework.from_tiling(t, [0, 3])).dimension == exact_dim(t, [0, 3]) == 4


def test_rigid_motions_are_flexes(penta):
    fw = Framework.from_tiling(penta)
    assert flex_residual(fw, translation_field(fw.n_joints, (0.3, -1.0))) < 1e-14
    assert flex_residual(fw, rotation_field(fw.positions, (0.5, 0.2))) < 1e-14


def test_basis_fields_are_flexes(tetra):
    fw = Framework.from_tiling(tetra)
    fs = flex_space(fw)
    assert fs.basis.shape == (2 * fw.n_joints, fs.dimension)
    for u in fs.fields():
        assert flex_residual(fw, u) < 1e-10


def test_brace_bar_is_a_diagonal(penta):
    a, b = brace_bar(penta, 5)
    js = list(penta.tiles[5])
    assert a == min(js)
    assert abs(js.index(a) - js.index(b)) == 2


def test_rank_decision_gap():
    s = np.array([10.0, 5.0, 1e-14])
    rank, thr, gap = rank_decision(s, (3, 3))
    assert rank == 2 and gap > 1e13
    rank, _, gap = rank_decision(np.array([1.0, 1e-8]), (2, 2))
    assert rank == 2 and gap == np.inf


def test_ill_conditioned_certification_raises():
    fs = FlexSpace(1, np.array([1.0, 1e-9]), 1e-8, 10.0)
    assert fs.ill_conditioned
    with pytest.raises(IllConditionedError):
        fs.certified_dimension()


def test_framework_validation():
    with pytest.raises(GeometryError):
        Framework([[0, 0], [1, 0]], [[0, 1], [1, 0]])
    with pytest.raises(GeometryError):
        Framework([[0, 0], [0, 0]], [[0, 1]])
    with pytest.raises(InputError):
        Framework([[0, 0], [1, 0]], [[0, 2]])
    with pytest.raises(GeometryError):
        is_infinitesimally_rigid(Framework([[0, 0], [1, 0], [2, 0]], [[0, 1], [1, 2]]))


def test_matrix_rows_are_bar_directions():
    fw = Framework([[0, 0], [2, 1]], [[0, 1]])
    assert np.allclose(assemble_rigidity_matrix(fw), [[-2, -1, 2, 1]])


def test_field_json_roundtrip():
    u = np.array([[1.0, 2.0], [3.0, -1.0]])
    assert np.array_equal(field_from_json(field_to_json(u), 2), u)
    z = np.array([[1 + 2j, 0.5j], [3.0, -1.0]])
    assert np.array_equal(field_from_json(field_to_json(z), 2), z)
    with pytest.raises(InputError):
        field_from_json({"fields": {"0": [1, 2]}}, 2)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_random_square_bracing_matches_exact_rank(m, n, data):
    t = square_patch(m, n)
    braced = data.draw(st.sets(st.integers(0, m * n - 1)))
    got = flex_space(Framework.from_tiling(t, braced), basis=False).dimension
    assert got == exact_dim(t, braced)
