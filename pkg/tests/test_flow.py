import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler_cvf import _numerics as num
from finsler_cvf.alphabeta import AlphaBetaMetric, phi_family
from finsler_cvf.errors import DomainEscape
from finsler_cvf.families import hat
from finsler_cvf.flow import check_scaling, integrate_flow
from finsler_cvf.geom import VectorField, constant_form, euclidean, linear_field, zero_form
from finsler_cvf.projflat import Example72Params, build_example72

ZERO = VectorField(lambda x: np.zeros_like(x), jac=lambda x: np.zeros((x.size, x.size)))


def test_zero_field():
    x0 = np.array([0.3, -0.2])
    res = integrate_flow(ZERO, x0, 0.7)
    assert np.array_equal(res.endpoint, x0) and np.array_equal(res.jacobian, np.eye(2))


def test_time_zero():
    res = integrate_flow(linear_field(np.eye(2)), [0.1, 0.2], 0.0)
    assert np.array_equal(res.endpoint, [0.1, 0.2]) and res.sigma == 0.0


@pytest.mark.parametrize("tau, t", [(0.3, 0.5), (-0.7, 0.2), (1.0, 1.0)])
def test_linear_closed_form(tau, t):
    x0 = np.array([0.3, -0.4, 0.1])
    res = integrate_flow(linear_field(-2 * tau * np.eye(3)), x0, t, c=lambda x: tau)
    k = np.exp(-2 * tau * t)
    assert np.abs(res.endpoint - k * x0).max() <= 1e-8
    assert np.abs(res.jacobian - k * np.eye(3)).max() <= 1e-8
    assert res.sigma == pytest.approx(tau * t, abs=1e-12)


def nonlinear_field():
    return VectorField(lambda x: np.array([np.sin(x[1]), -x[0] + 0.3 * x[0] * x[1]]))


@settings(max_examples=5, deadline=None)
@given(st.floats(0.05, 0.4), st.floats(0.05, 0.4))
def test_group_property(t, s):
    V = nonlinear_field()
    x0 = np.array([0.2, -0.1])
    direct = integrate_flow(V, x0, t + s).endpoint
    composed = integrate_flow(V, integrate_flow(V, x0, s).endpoint, t).endpoint
    assert np.abs(direct - composed).max() <= 1e-7


def test_sigma_additive():
    V = nonlinear_field()
    c = lambda x: float(np.cos(x[0]) + x[1])
    x0 = np.array([0.2, -0.1])
    t, s = 0.3, 0.25
    a = integrate_flow(V, x0, t, c=c)
    b = integrate_flow(V, a.endpoint, s, c=c)
    assert integrate_flow(V, x0, t + s, c=c).sigma == pytest.approx(a.sigma + b.sigma, abs=1e-8)


def test_jacobian_matches_perturbed_trajectories():
    V = nonlinear_field()
    x0 = np.array([0.2, -0.1])
    res = integrate_flow(V, x0, 0.5)
    eps = 1e-6
    fd = np.column_stack([(integrate_flow(V, x0 + eps * e, 0.5).endpoint
                           - integrate_flow(V, x0 - eps * e, 0.5).endpoint) / (2 * eps) for e in np.eye(2)])
    assert np.abs(fd - res.jacobian).max() <= 1e-7


def test_domain_escape():
    V = linear_field(np.eye(2))
    with pytest.raises(DomainEscape):
        integrate_flow(V, [0.5, 0.0], 1.0, domain=lambda x: np.linalg.norm(x) < 1.0)


def samples(n, count, radius, seed):
    return list(zip(num.ball_samples(n, count, radius, seed=seed), num.unit_vectors(n, count, seed=seed + 1)))


def test_minkowski_dilation():
    F = AlphaBetaMetric(euclidean(2), constant_form([0.3, -0.2]), phi_family("randers"))
    rep = check_scaling(F, linear_field(-0.8 * np.eye(2)), 0.4, samples(2, 10, 0.5, 0), [0.2, 0.5])
    assert rep.err_sigma <= 1e-6 and rep.err_c <= 1e-6
    # homothetic: both forms coincide
    assert np.allclose(rep.errors_sigma, rep.errors_c, atol=1e-13)


def test_killing_rotation():
    F = AlphaBetaMetric(euclidean(3), zero_form(3), phi_family("randers"))
    rep = check_scaling(F, linear_field(hat([0.2, -0.5, 1.0])), 0.0, samples(3, 5, 0.5, 2), [0.4])
    assert rep.err_sigma <= 1e-8 and rep.err_c <= 1e-8


def test_example72_sigma_vs_constant_exponent():
    inst = build_example72(Example72Params(-0.25, 1.0, np.array([1.0, 0.0])))
    F = AlphaBetaMetric(inst.chart, inst.beta, phi_family("randers"))
    rep = check_scaling(F, inst.V, inst.c, samples(2, 8, 0.3, 3), [0.3],
                        domain=lambda x: np.linalg.norm(x) <= inst.radius)
    assert rep.err_sigma <= 1e-5
    assert rep.err_c >= 1e-2
