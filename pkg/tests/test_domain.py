import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tumoursim.domain import (DomainError, DomainMask, TumourExtinct, initial_mask, metrics,
                              update_mask)
from tumoursim.fields import ModelParams
from tumoursim.mesh import TriMesh, structured_mesh
from tumoursim.shapes import ShapeSpec, three_blob_shape
from tumoursim.mesh import shape_mesh

from conftest import strip_mesh as strip
from oracles import mask_fixpoint

P = ModelParams()
THR = P.alpha_thr


def test_initial_circle_mask_area(circle_mesh, circle_shape):
    mask = initial_mask(circle_mesh, circle_shape)
    assert mask.area == pytest.approx(np.pi, rel=0.02)
    assert mask.n_components == 1
    assert metrics(mask).radius == pytest.approx(np.sqrt(mask.area / np.pi))


def test_centroid_on_boundary_excluded():
    m = TriMesh([[-1, -1], [2, -1], [-1, 2]], [[0, 1, 2]])
    assert np.allclose(m.centroids[0], 0.0)
    shape = ShapeSpec("circle", centre=(1.0, 0.0))
    with pytest.raises(DomainError, match="empty"):
        initial_mask(m, shape)


def test_three_blobs_give_three_components():
    shape = three_blob_shape()
    mask = initial_mask(shape_mesh(shape), shape)
    assert mask.n_components == 3


def test_initial_mask_invariant_under_relabelling(circle_mesh, circle_shape):
    perm = np.random.default_rng(0).permutation(circle_mesh.n_triangles)
    m2 = TriMesh(circle_mesh.vertices, circle_mesh.triangles[perm])
    a = initial_mask(circle_mesh, circle_shape)
    b = initial_mask(m2, circle_shape)
    assert np.array_equal(a.member[perm], b.member)
    assert a.area == pytest.approx(b.area, rel=1e-14)


def test_no_op_fixpoint():
    m = structured_mesh(4)
    prev = DomainMask(m, np.hypot(*m.centroids.T) < 2.5)
    alpha = np.where(prev.member, 0.5, 0.0)
    assert update_mask(prev, alpha, P) == prev


def test_neighbour_at_threshold_is_added():
    m = strip(3)
    prev = DomainMask(m, [True, False, False])
    new = update_mask(prev, np.array([0.5, THR, THR]), P)
    assert new.member.tolist() == [True, True, False]


def test_removal_chain_iterates():
    m = strip(5)
    prev = DomainMask(m, np.ones(5, dtype=bool))
    alpha = np.array([0.5, 0.001, 0.001, 0.001, 0.001])
    new = update_mask(prev, alpha, P)
    assert new.member.tolist() == [True, False, False, False, False]
    assert np.array_equal(new.member, mask_fixpoint(m.triangles, prev.member, alpha, THR))


def test_enclosed_low_triangle_is_kept():
    m = structured_mesh(3)
    member = np.ones(m.n_triangles, dtype=bool)
    alpha = np.full(m.n_triangles, 0.5)
    centre = int(np.argmin(np.hypot(*m.centroids.T)))
    alpha[centre] = 0.0
    new = update_mask(DomainMask(m, member), alpha, P)
    assert new.member[centre]


def test_extinction():
    m = strip(3)
    with pytest.raises(TumourExtinct):
        update_mask(DomainMask(m, [True, True, False]), np.zeros(3), P)


def test_metrics_examples():
    m = TriMesh([[0, 0], [2, 0], [0, 1]], [[0, 1, 2]])
    met = metrics(DomainMask(m, [True]))
    assert met.radius == pytest.approx(np.sqrt(1.0 / np.pi))
    assert met.n_components == 1
    assert np.allclose(met.centroid, [2 / 3, 1 / 3])
    with pytest.raises(DomainError):
        metrics(DomainMask(m, [False]))


def test_bridge_merges_components():
    m = strip(5)
    prev = DomainMask(m, [True, True, False, True, True])
    assert prev.n_components == 2
    new = update_mask(prev, np.array([0.5, 0.5, 0.3, 0.5, 0.5]), P)
    assert new.n_components == 1


def test_equivalent_radius_of_pi_area():
    m = TriMesh([[0, 0], [np.pi, 0], [0, 2.0]], [[0, 1, 2]])
    assert DomainMask(m, [True]).radius == pytest.approx(1.0)


def check_mask_consistency(mask):
    m = mask.mesh
    owner, nbr = m.edge_tris.T
    s_own = mask.member[owner]
    s_nbr = np.where(nbr >= 0, mask.member[np.maximum(nbr, 0)], False)
    assert np.array_equal(np.flatnonzero(s_own != s_nbr), mask.boundary_edges)
    assert mask.area == pytest.approx(m.areas[mask.member].sum(), rel=1e-14)
    lab = mask.labels
    assert np.all(lab[~mask.member] == -1)
    both = s_own & s_nbr
    assert np.all(lab[owner[both]] == lab[nbr[both]])
    assert set(lab[mask.member]) == set(range(mask.n_components))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_update_matches_fixpoint_on_random_fixtures(seed):
    r = np.random.default_rng(seed)
    m = structured_mesh(int(r.integers(1, 3)))
    if r.random() < 0.5:
        m = strip(int(r.integers(2, 17)))
    prev = DomainMask(m, r.random(m.n_triangles) < 0.5)
    alpha = np.where(r.random(m.n_triangles) < 0.5, r.uniform(0, THR, m.n_triangles),
                     r.uniform(THR, 1, m.n_triangles))
    ref = mask_fixpoint(m.triangles, prev.member, alpha, THR)
    if not ref.any():
        with pytest.raises(TumourExtinct):
            update_mask(prev, alpha, P)
        return
    new = update_mask(prev, alpha, P)
    assert np.array_equal(new.member, ref)
    check_mask_consistency(new)


def test_update_matches_fixpoint_exhaustively_on_strip():
    m = strip(5)
    for bits in itertools.product([False, True], repeat=10):
        prev = np.array(bits[:5])
        alpha = np.where(bits[5:], 0.5, 0.001)
        ref = mask_fixpoint(m.triangles, prev, alpha, THR)
        if not ref.any():
            with pytest.raises(TumourExtinct):
                update_mask(DomainMask(m, prev), alpha, P)
        else:
            assert np.array_equal(update_mask(DomainMask(m, prev), alpha, P).member, ref)
