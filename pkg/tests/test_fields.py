import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tumoursim.fields import (CellField, ModelParams, NodalScalarField, ParameterError,
                              TH2VectorField, birth_rate, clamp_alpha, death_rate,
                              discrete_average, for_variant, net_growth, stress_potential)
from tumoursim.mesh import TriMesh

P = ModelParams()


def test_birth_rate_values():
    assert birth_rate(0.0, P) == 0.0
    assert birth_rate(1.0, P) == pytest.approx(1.0, abs=1e-15)
    assert birth_rate(0.5, P) == pytest.approx(5.5 / 6.0, abs=1e-15)


def test_death_rate_values():
    assert death_rate(0.0, P) == pytest.approx(0.5)
    assert death_rate(1.0, P) == pytest.approx(1.0 / 11.0, abs=1e-15)
    q = P.with_(s3=P.s2 * P.s4)
    assert np.allclose(death_rate(np.linspace(0, 1, 11), q), q.s2, rtol=0, atol=1e-15)


def test_net_growth_values():
    c = np.linspace(0, 1, 7)
    assert np.allclose(net_growth(1.0, c, P), -death_rate(c, P))
    assert net_growth(0.8, 1.0, P) == pytest.approx(0.2 - 1.0 / 11.0, abs=1e-15)
    assert np.allclose(net_growth(np.linspace(0, 1, 5), 0.0, P), -0.5)


def test_stress_potential_values():
    assert stress_potential(0.5, P) == 0.0
    assert stress_potential(P.alpha_star, P) == 0.0
    assert stress_potential(0.9, P) == pytest.approx(9.0, rel=1e-12)


def test_stress_potential_clamped_near_one():
    a = clamp_alpha(1.0)
    assert a == 0.999
    assert np.isfinite(stress_potential(1.0, P))
    assert stress_potential(1.5, P) == stress_potential(0.999, P)


def test_stress_potential_continuous_and_increasing():
    eps = 1e-9
    assert stress_potential(P.alpha_star + eps, P) < 1e-7
    a = np.linspace(P.alpha_star + 1e-3, 0.99, 200)
    assert np.all(np.diff(stress_potential(a, P)) > 0)


def test_birth_rate_bounded_and_monotone():
    c = np.linspace(0, 1, 501)
    b = birth_rate(c, P)
    assert np.all((b >= 0) & (b <= 1 + 1e-15))
    assert np.all(np.diff(b) > 0)


def test_net_growth_sign_threshold():
    a = np.linspace(0.0, 0.999, 200)
    crit = 1.0 - death_rate(1.0, P) / birth_rate(1.0, P)
    assert crit == pytest.approx(1.0 - 1.0 / 11.0)
    f = net_growth(a, 1.0, P)
    away = np.abs(a - crit) > 1e-12
    assert np.array_equal((f > 0)[away], (a < crit)[away])


@pytest.fixture
def tri():
    return TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])


def test_discrete_average_examples(tri):
    assert discrete_average([0.3, 0.3, 0.3], lambda c: c, tri)[0] == pytest.approx(0.3)
    assert discrete_average([0.0, 1.0, 2.0], lambda c: c, tri)[0] == pytest.approx(1.0)
    assert discrete_average([1.0, 1.0, 1.0], lambda c: birth_rate(c, P), tri)[0] == \
        pytest.approx(1.0, abs=1e-15)


def test_discrete_average_applies_function_before_averaging(tri):
    c = np.array([0.0, 0.5, 1.0])
    got = discrete_average(c, lambda v: birth_rate(v, P), tri)[0]
    assert got == pytest.approx(birth_rate(c, P).mean())
    assert got != pytest.approx(birth_rate(c.mean(), P))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.floats(-3, 3), st.floats(-3, 3))
def test_discrete_average_linear_in_g(c, s, t):
    m = TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    g1 = lambda v: birth_rate(v, P)
    g2 = lambda v: death_rate(v, P)
    lhs = discrete_average(c, lambda v: s * g1(v) + t * g2(v), m)
    rhs = s * discrete_average(c, g1, m) + t * discrete_average(c, g2, m)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_variant_defaults():
    num = for_variant("num")
    assert (num.variant, num.Q, num.eta, num.T_final, num.c0_value) == ("NUM", 0.5, 1.0, 20.0, 1.0)
    nlm = for_variant("NLM")
    assert (nlm.Q, nlm.eta, nlm.T_final, nlm.c0_value) == (0.01, 2.0, 30.0, 0.0)
    assert (num.s1, num.s2, num.s3, num.s4, num.Qhat, num.mu) == (10, 0.5, 0.5, 10, 0, 1)
    assert num.lam == pytest.approx(-2.0 / 3.0)
    assert (num.alpha_thr, num.alpha_star, num.delta, num.k) == (0.01, 0.8, 0.1, 1.0)


@pytest.mark.parametrize("kw", [dict(alpha_thr=1.5), dict(alpha_thr=0.0), dict(s1=0.0),
                                dict(mu=-1.0), dict(eta=0.0), dict(k=0.0), dict(delta=0.0),
                                dict(c0_value=1.5), dict(alpha_star=1.0), dict(lam=-1.0),
                                dict(variant="XYZ"), dict(substeps=0), dict(substeps=1.5)])
def test_parameter_invariants(kw):
    with pytest.raises(ParameterError):
        ModelParams(**kw)


def test_step_counts():
    assert ModelParams(T_final=20.0).n_steps == 200
    assert ModelParams(T_final=0.35).n_steps == 3
    assert ModelParams(substeps=4).inner_delta == pytest.approx(0.025)


def test_field_containers(tri):
    a = CellField(tri, [0.5])
    assert np.asarray(a).shape == (1,)
    assert NodalScalarField(tri, [0, 1, 2]).copy().values.tolist() == [0, 1, 2]
    with pytest.raises(ValueError):
        NodalScalarField(tri, [0, 1])
    u = TH2VectorField.zeros(tri)
    assert u.vertex_values.shape == (3, 2) and u.midpoint_values.shape == (3, 2)
