from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasirigid.errors import InvalidSpecError, IrregularMultigridError, OnLineError
from quasirigid.geometry import (AffineGrid, MultigridSpec, grid_index, index_vector,
                                 intersections_on_line, pentagrid_preset, require_regular,
                                 rotation_multigrid, square_grid_preset, tetragrid_preset,
                                 validate_regular, window_intersections)


def test_square_grid_edge_vectors():
    spec = square_grid_preset()
    assert np.allclose(spec.edge_vectors, [[1, 0], [0, 1]])
    assert np.allclose(spec.offsets, [0.5, 0.5])


def test_grid_value_matches_affine_preimage():
    grid = AffineGrid(((2.0, 1.0), (0.5, 1.5)), (0.3, -0.2))
    z = np.array([1.7, -0.4])
    pre = np.linalg.solve(grid.matrix, z - np.array(grid.translation))
    assert grid.value(z) == pytest.approx(pre[0])


def test_line_point_lies_on_line():
    grid = AffineGrid(((0.8, -0.6), (0.6, 0.8)), (0.25, 0.1))
    for k in (-3, 0, 4):
        assert grid.value(grid.line_point(k)) == pytest.approx(k)
        assert grid.value(grid.line_point(k) + 5 * grid.direction) == pytest.approx(k)


def test_pentagrid_has_five_directions_36_degrees_apart(penta_spec):
    normals = np.array([g.normal for g in penta_spec.grids])
    ang = np.degrees(np.arctan2(normals[:, 1], normals[:, 0])) % 180
    diffs = np.diff(np.sort(ang))
    assert np.allclose(diffs, 36.0)


def test_literal_pentagrid_offsets_are_projected():
    gam = (0.1, 0.15, 0.2, 0.25, -0.7)
    spec = pentagrid_preset(gam)
    expected = [g * math.cos(2 * math.pi * k / 5) for k, g in enumerate(gam)]
    assert np.allclose(np.abs(spec.offsets), np.abs(expected))
    assert np.allclose(pentagrid_preset(gam, normal_offsets=True).offsets, gam)


def test_pentagrid_nonzero_sum_warns():
    with pytest.warns(UserWarning):
        spec = pentagrid_preset((0.1, 0.1, 0.1, 0.1, 0.1))
    assert spec.warning is not None
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert pentagrid_preset((0.1, 0.1, 0.1, 0.1, -0.4)).warning is None


def test_invalid_specs_rejected():
    g = AffineGrid(((1.0, 0.0), (0.0, 1.0)))
    with pytest.raises(InvalidSpecError):
        MultigridSpec((g,), (1.0,))
    with pytest.raises(InvalidSpecError):
        MultigridSpec((g, g), (1.0, 0.0))
    with pytest.raises(InvalidSpecError):
        MultigridSpec((g, AffineGrid(((1.0, 0.0), (0.0, -1.0)))), (1.0, 1.0))
    with pytest.raises(InvalidSpecError):
        pentagrid_preset((0.1, 0.2))


def test_parallel_grids_reported_and_refused():
    spec = rotation_multigrid([0.0, 0.0, 1.0], [0.1, 0.3, 0.2])
    rep = validate_regular(spec, 5.0)
    assert rep.parallel_pairs == [(0, 1)]
    with pytest.raises(IrregularMultigridError):
        require_regular(spec, 5.0)


def test_zero_offset_pentagrid_is_singular():
    # every grid has a line through the origin
    spec = pentagrid_preset((0.0,) * 5)
    rep = validate_regular(spec, 3.0)
    assert rep.triple_points
    with pytest.raises(IrregularMultigridError):
        require_regular(spec, 3.0)


def test_grid_index_on_line_raises():
    spec = square_grid_preset((0.5, 0.5))
    with pytest.raises(OnLineError):
        grid_index(spec, 0, (1.5, 0.2))
    assert index_vector(spec, (1.6, 0.2)) == (1, -1)


def test_window_intersections_count_square():
    spec = square_grid_preset((0.5, 0.5))
    pairs, lines, pts = window_intersections(spec, 2.0)
    # lattice points (k - 0.5, l - 0.5) inside the disc of radius 2
    brute = sum(1 for k in range(-5, 6) for l in range(-5, 6)
                if (k - 0.5) ** 2 + (l - 0.5) ** 2 <= 4.0)
    assert len(pts) == brute
    assert np.allclose(spec.values(pts)[np.arange(len(pts)), 0], lines[:, 0])


def test_regular_preset_has_no_triple_points(penta_spec, tetra_spec):
    for spec in (penta_spec, tetra_spec):
        rep = validate_regular(spec, 8.0)
        assert rep.regular and rep.usable
        assert rep.intersection_count > 0


def test_intersections_on_line_are_ordered_and_on_both_lines(penta_spec):
    li = intersections_on_line(penta_spec, 2, 0, 6.0)
    s = [x.arclength for x in li.intersections]
    assert s == sorted(s)
    for x in li.intersections:
        (i, j), (k, l) = x.grid_pair, x.line_indices
        vals = penta_spec.values(np.array(x.point))
        assert vals[i] == pytest.approx(k) and vals[j] == pytest.approx(l)
    # crossings of grid j are spaced 1 / |g_j . d|
    d = penta_spec.grids[2].direction
    for j, beta in li.spacing.items():
        assert beta == pytest.approx(1 / abs(penta_spec.gradients[j] @ d))


def test_spec_roundtrip(tetra_spec):
    again = MultigridSpec.from_dict(tetra_spec.to_dict())
    assert again == tetra_spec


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=4, max_size=4))
def test_tetragrid_values_shift_by_one_per_line(gammas):
    spec = tetragrid_preset(gammas)
    for g in spec.grids:
        p = g.line_point(3)
        assert g.value(p + g.spacing * g.normal) == pytest.approx(4.0)
