import logging

import numpy as np
import pytest

from tumoursim import driver
from tumoursim.driver import initialize, run, series_row, step
from tumoursim.fields import ModelParams, birth_rate, death_rate
from tumoursim.linalg import SingularSystemError
from tumoursim.mesh import MeshParams, shape_mesh
from tumoursim.output import write_series_csv
from tumoursim.shapes import ShapeSpec

ELL = 2.5
SHAPE = ShapeSpec("circle")


@pytest.fixture(scope="module")
def small_mesh():
    return shape_mesh(SHAPE, ELL, MeshParams(max_area=0.05))


def params(**kw):
    return ModelParams(ell=ELL, **kw)


def check_state(state, p):
    mesh, mask = state.mesh, state.mask
    assert state.t == pytest.approx(state.n * p.delta, rel=0, abs=1e-12)
    inactive = np.ones(len(state.u), dtype=bool)
    inactive[mesh.triangles[mask.triangles].ravel()] = False
    inactive[mesh.n_vertices + mesh.tri_edges[mask.triangles].ravel()] = False
    assert not np.any(state.u[inactive])
    assert not np.any(state.p[inactive[:mesh.n_vertices]])
    if p.variant == "NUM":
        assert np.all(state.c[inactive[:mesh.n_vertices]] == 1.0)
    assert np.all(state.alpha[~mask.member] < p.alpha_thr)
    assert 0.0 <= state.c.min() <= state.c.max() <= 1.0


def test_initial_state(circle_mesh):
    p = ModelParams()
    s = initialize(circle_mesh, SHAPE, p)
    row = series_row(s)
    assert row.cell_volume == pytest.approx(0.8 * np.pi, rel=0.03)
    assert row.t == 0.0 and row.components == 1
    check_state(s, p)


def test_nlm_initial_nutrient_is_zero(small_mesh):
    s = initialize(small_mesh, SHAPE, params(variant="NLM"))
    row = series_row(s)
    assert row.min_c == 0.0 and row.max_c == 0.0


def test_initial_mask_is_geometric(small_mesh):
    p = params(alpha0_value=0.01)
    s = initialize(small_mesh, SHAPE, p)
    assert np.array_equal(s.mask.member, initialize(small_mesh, SHAPE, params()).mask.member)


def test_zero_growth_state_is_fixed_point(small_mesh):
    # one scheme step: with substeps the nutrient would move between substeps
    p = params(s2=5.0, substeps=1)
    a_fp = 1.0 - death_rate(1.0, p) / birth_rate(1.0, p)
    assert a_fp == pytest.approx(0.5)
    s0 = initialize(small_mesh, SHAPE, p.with_(alpha0_value=a_fp))
    assert not np.any(s0.u)
    s1 = step(s0, p)
    assert np.allclose(s1.alpha, s0.alpha, rtol=0, atol=1e-12)
    assert s1.mask == s0.mask


def test_state_invariants_hold_along_a_run(small_mesh):
    p = params(T_final=1.0)
    s = initialize(small_mesh, SHAPE, p)
    for _ in range(p.n_steps):
        s = step(s, p)
        check_state(s, p)
    assert s.n == 10


def test_zero_final_time_gives_initial_row_only(small_mesh):
    rows, state = run(small_mesh, SHAPE, params(T_final=0.0))
    assert len(rows) == 1 and state.n == 0


def test_truncated_final_time_warns(small_mesh, caplog):
    with caplog.at_level(logging.WARNING):
        rows, _ = run(small_mesh, SHAPE, params(T_final=0.25))
    assert len(rows) == 3
    assert "not a multiple" in caplog.text


def test_runs_are_bit_identical(small_mesh, tmp_path):
    p = params(T_final=0.5)
    paths = []
    for k in range(2):
        rows, _ = run(small_mesh, SHAPE, p)
        paths.append(tmp_path / f"s{k}.csv")
        write_series_csv(rows, paths[-1])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_snapshot_cadence(small_mesh):
    seen = []
    run(small_mesh, SHAPE, params(T_final=0.5), snapshot_every=2,
        on_snapshot=lambda s: seen.append(s.n))
    assert seen == [0, 2, 4]


def test_death_alone_cannot_push_fraction_below_threshold(small_mesh):
    p = params(s2=50.0, s3=50.0)
    s = initialize(small_mesh, SHAPE, p)
    for _ in range(10):
        s = step(s, p)
    assert s.alpha[s.mask.member].min() >= p.alpha_thr
    assert s.mask == initialize(small_mesh, SHAPE, p).mask


def test_extinction_ends_run_gracefully(small_mesh):
    p = params(alpha0_value=0.005, T_final=1.0)
    rows, state = run(small_mesh, SHAPE, p)
    assert state.extinct
    assert rows[-1].radius == 0.0 and rows[-1].components == 0
    assert len(rows) < p.n_steps + 1


def test_solver_error_reports_step(small_mesh, monkeypatch):
    p = params()
    s = initialize(small_mesh, SHAPE, p)

    def boom(*a, **k):
        raise SingularSystemError("zero pivot")

    monkeypatch.setattr(driver, "solve_mechanics", boom)
    with pytest.raises(SingularSystemError, match=r"step 1 \(substep 1\)"):
        step(s, p)


def test_substeps_do_not_change_reporting_times(small_mesh):
    p1 = params(substeps=1, T_final=0.3)
    rows, state = run(small_mesh, SHAPE, p1)
    assert [r.t for r in rows] == pytest.approx([0.0, 0.1, 0.2, 0.3])
    rows4, _ = run(small_mesh, SHAPE, p1.with_(substeps=4))
    assert [r.t for r in rows4] == pytest.approx([r.t for r in rows])
