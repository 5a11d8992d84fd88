import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler_cvf import _numerics as num
from finsler_cvf.alphabeta import (
    AlphaBetaMetric,
    check_non_riemannian,
    douglas_ode_residual,
    eval_F,
    is_riemannian_type,
    phi_family,
    regularity_check,
)
from finsler_cvf.errors import DomainViolation, InvalidFamilyParams, ODESingularity
from finsler_cvf.geom import ConstCurvChart, constant_form, euclidean, zero_form


def test_randers_values():
    phi = phi_family("randers")
    assert phi(0.0) == 1.0 and phi.dphi(0.0) == 1.0
    assert all(phi.ddphi(s) == 0.0 for s in (-0.5, 0.0, 0.7))


@pytest.mark.parametrize("kind, params", [
    ("randers", {}),
    ("f0_type", {"sign": 1}),
    ("f0_type", {"sign": -1}),
    ("isoS_2d", {"k1": 0.0, "k2": 1.0}),
    ("isoS_2d", {"k1": -0.5, "k2": 2.0, "sign": -1}),
    ("douglas_ode", {"k1": 1.0, "k2": 0.5, "k3": 0.0, "p0": 0.3}),
])
def test_phi_normalised(kind, params):
    phi = phi_family(kind, **params)
    assert phi(0.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("kind, params", [
    ("f0_type", {"sign": -1}),
    ("isoS_2d", {"k1": 0.2, "k2": 1.5}),
    ("douglas_ode", {"k1": 1.0, "k2": 0.5, "k3": 0.2, "p0": 0.1}),
])
def test_phi_derivatives_consistent(kind, params):
    phi = phi_family(kind, **params)
    for s in np.linspace(-0.5, 0.5, 7) * phi.s_max:
        assert phi.dphi(s) == pytest.approx(num.derivative_1d(phi.phi, s), abs=1e-7)
        assert phi.ddphi(s) == pytest.approx(num.derivative_1d(phi.dphi, s), abs=1e-6)


def test_isoS_2d_invalid():
    with pytest.raises(InvalidFamilyParams):
        phi_family("isoS_2d", k1=1.0, k2=0.5)


def test_isoS_2d_quadrature_refinement():
    a = phi_family("isoS_2d", k1=0.3, k2=1.2)
    b = phi_family("isoS_2d", k1=0.3, k2=1.2, nodes=96)
    ss = np.linspace(-0.9, 0.9, 11) * a.s_max
    assert max(abs(a(s) - b(s)) for s in ss) <= 1e-9


def test_douglas_sqrt_oracle():
    phi = phi_family("douglas_ode", k1=1, k2=0, k3=0, p0=0, strict=False)
    ss = np.linspace(0.0, 0.5, 101)
    assert max(abs(phi(s) - np.sqrt(1 + s * s)) for s in ss) <= 1e-8


def test_douglas_requires_non_riemannian_params():
    with pytest.raises(InvalidFamilyParams):
        phi_family("douglas_ode", k1=1, k2=0, k3=0)


@pytest.mark.parametrize("k", [(1.0, 0.5, 0.0), (-0.5, 0.3, 0.4), (2.0, -0.5, 0.0)])
def test_douglas_residual(k):
    phi = phi_family("douglas_ode", k1=k[0], k2=k[1], k3=k[2], p0=0.2, s_max=0.6)
    ss = np.linspace(-0.6, 0.6, 61)
    assert max(abs(douglas_ode_residual(phi, s)) for s in ss) <= 1e-7


def test_douglas_singular_leading_coefficient():
    # 1 - 4 s^2 vanishes at s = 1/2
    with pytest.raises(ODESingularity):
        phi_family("douglas_ode", k1=-4.0, k2=0.0, k3=0.0, s_max=0.7, strict=False)


def test_non_riemannian_guard():
    assert is_riemannian_type(phi_family("douglas_ode", k1=1, k2=0, k3=0, strict=False))
    with pytest.raises(InvalidFamilyParams):
        check_non_riemannian(phi_family("douglas_ode", k1=1, k2=0, k3=0, strict=False))
    assert not is_riemannian_type(phi_family("randers"))
    assert not is_riemannian_type(phi_family("f0_type", sign=1))


def test_unknown_family():
    with pytest.raises(InvalidFamilyParams):
        phi_family("nope")


def test_eval_F_examples():
    x = np.zeros(2)
    y = np.array([1.0, 0.0])
    F0 = AlphaBetaMetric(euclidean(2), zero_form(2), phi_family("f0_type", sign=1))
    assert eval_F(F0, x, np.array([3.0, 4.0])) == pytest.approx(5.0)
    F = AlphaBetaMetric(euclidean(2), constant_form([0.5, 0.0]), phi_family("randers"))
    assert eval_F(F, x, y) == pytest.approx(1.5, abs=1e-15)


def test_eval_F_domain():
    F = AlphaBetaMetric(euclidean(2), constant_form([1.5, 0.0]), phi_family("randers"))
    with pytest.raises(DomainViolation):
        eval_F(F, np.zeros(2), np.array([1.0, 0.0]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.floats(0.01, 50.0))
def test_eval_F_homogeneous(y, lam):
    F = AlphaBetaMetric(ConstCurvChart(0.4, 3), constant_form([0.3, -0.2, 0.1]), phi_family("isoS_2d", k1=0, k2=1))
    x = np.array([0.1, 0.2, -0.1])
    y = np.array(y)
    assert eval_F(F, x, lam * y) == pytest.approx(lam * eval_F(F, x, y), rel=1e-12)


def test_regularity_examples():
    pts = num.ball_samples(2, 5, 0.5, seed=0)
    rep = regularity_check(AlphaBetaMetric(euclidean(2), zero_form(2), phi_family("randers")), pts)
    assert rep.passed and rep.min_phi == pytest.approx(1.0)
    rep = regularity_check(AlphaBetaMetric(euclidean(2), constant_form([0.5, 0.0]), phi_family("randers")), pts)
    assert rep.passed and rep.min_phi == pytest.approx(0.5)
    rep = regularity_check(AlphaBetaMetric(euclidean(2), constant_form([1.0, 0.0]), phi_family("randers")), pts)
    assert not rep.passed
