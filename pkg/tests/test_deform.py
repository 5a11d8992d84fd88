import warnings

import numpy as np
import pytest

from finsler_cvf import _numerics as num
from finsler_cvf.deform import (
    IDENTITY,
    DeformationTriple,
    deform_forward,
    deform_inverse,
    douglas_2d_v_literal,
    form_check,
    inverse_fields,
    isotropic_relation,
    navigation_triple,
    recipe,
)
from finsler_cvf.errors import AmbiguousFixedPoint, InvalidFamilyParams, NoFixedPoint, NotPositiveDefinite
from finsler_cvf.geom import ConstCurvChart, OneFormField, constant_form, constant_metric, euclidean, norm_sq


def smooth_form(n):
    return OneFormField(lambda x: 0.2 * np.sin(x + np.arange(n)) + 0.1 * x * (x @ x))


def test_identity_is_exact():
    chart = ConstCurvChart(0.5, 3)
    beta = smooth_form(3)
    pair = deform_forward(chart, beta, IDENTITY)
    for x in num.ball_samples(3, 5, 0.5, seed=0):
        assert np.array_equal(pair.h.coeffs(x), chart.coeffs(x))
        assert np.array_equal(pair.rho.coeffs(x), beta.coeffs(x))


def test_navigation_forward_example():
    b = np.array([0.5, 0.0])
    pair = deform_forward(euclidean(2), constant_form(b), navigation_triple())
    x = np.array([0.3, -0.1])
    assert np.allclose(pair.h.coeffs(x), 0.75 * np.eye(2) - 0.75 * np.outer(b, b), atol=1e-15)
    assert np.allclose(pair.rho.coeffs(x), -0.75 * b, atol=1e-15)


def test_forward_not_positive_definite():
    # u + v t = 1 - 4 t vanishes at t = 1/4
    triple = DeformationTriple(lambda t: 1.0, lambda t: -4.0, lambda t: 1.0, interval=(0.0, 1.0))
    pair = deform_forward(euclidean(2), constant_form([0.5, 0.0]), triple)
    with pytest.raises(NotPositiveDefinite):
        pair.h.coeffs(np.zeros(2))


def test_forward_derivatives_match_fd():
    chart = ConstCurvChart(-0.3, 3)
    triple = DeformationTriple(lambda t: 1 + t, lambda t: t, np.exp, lambda t: 1.0, lambda t: 1.0, np.exp)
    pair = deform_forward(chart, smooth_form(3), triple)
    x = np.array([0.1, -0.2, 0.15])
    assert np.allclose(pair.h.grad(x), num.jacobian(pair.h.coeffs, x), atol=1e-9)
    assert np.allclose(pair.rho.jac(x), num.jacobian(pair.rho.coeffs, x), atol=1e-9)


def test_inverse_identity():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3))
    h = A @ A.T + 3 * np.eye(3)
    p = rng.standard_normal(3) * 0.3
    inv = deform_inverse(h, p, IDENTITY)
    assert np.allclose(inv.a, h, atol=1e-12) and np.allclose(inv.b, p, atol=1e-12)


@pytest.mark.parametrize("triple", [
    navigation_triple(),
    DeformationTriple(lambda t: 1 + t, lambda t: t, np.exp, interval=(0.0, 1.0)),
    recipe("isoS_2d", k1=0.0, k2=1.0),
    recipe("douglas_2d", sign=1),
])
def test_round_trip(triple):
    chart = ConstCurvChart(0.4, 3)
    beta = smooth_form(3)
    pair = deform_forward(chart, beta, triple)
    for x in num.ball_samples(3, 5, 0.5, seed=1):
        inv = deform_inverse(pair.h.coeffs(x), pair.rho.coeffs(x), triple)
        assert np.abs(inv.a - chart.coeffs(x)).max() <= 1e-10
        assert np.abs(inv.b - beta.coeffs(x)).max() <= 1e-10


def test_navigation_inverse_against_scan():
    h = np.eye(2)
    p = np.array([0.3, 0.0])
    triple = navigation_triple()
    inv = deform_inverse(h, p, triple)
    # the deformation identities hold for the returned pair
    u, v, w = triple(inv.t)
    assert np.abs(u * inv.a + v * np.outer(inv.b, inv.b) - h).max() <= 1e-10
    assert np.abs(w * inv.b - p).max() <= 1e-10
    assert inv.b @ np.linalg.solve(inv.a, inv.b) == pytest.approx(inv.t, abs=1e-12)
    # brute-force: t - B u / (1 - v B) on a dense grid
    ts = np.linspace(1e-4, 1 - 1e-4, 10_000)
    u, v, w = 1 - ts, ts - 1, ts - 1
    B = 0.09 / w**2
    g = u * B / (1 - v * B) - ts
    k = np.flatnonzero(np.diff(np.sign(g)))
    assert len(k) == 1
    assert inv.t == pytest.approx(ts[k[0]], abs=2e-4)


def test_no_fixed_point():
    with pytest.raises(NoFixedPoint):
        deform_inverse(np.eye(2), np.array([3.0, 0.0]), IDENTITY, bracket=(0.0, 1.0))


def test_ambiguous_fixed_point_warns():
    # u = 1, v = 0, w(t)^2 = B / t has many roots when w oscillates
    triple = DeformationTriple(lambda t: 1.0, lambda t: 0.0, lambda t: 1.0 + 0.5 * np.sin(40 * t),
                               interval=(0.0, 1.0))
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        inv = deform_inverse(np.eye(2), np.array([0.6, 0.0]), triple)
    assert any(issubclass(w.category, AmbiguousFixedPoint) for w in rec)
    assert len(inv.roots) > 1 and inv.t == min(inv.roots)


def test_recipe_examples():
    nav = recipe("isoS_randers", k1=1.0, k2=-1.0, w=lambda t: t - 1.0)
    for t in (0.1, 0.5, 0.9):
        assert np.allclose(nav(t), (1 - t, t - 1, t - 1), atol=1e-15)
    assert recipe("isoS_2d", k1=0.3, k2=1.0)(0.0) == (1.0, 0.0, 1.0)
    w = recipe("douglas_n3", k1=0.0, k2=0.0, k3=1.0, strict=False).w
    for t in (0.2, 0.7, 1.5):
        assert w(t) == pytest.approx((1 + t) ** -0.5, abs=1e-13)


@pytest.mark.parametrize("kind, params", [
    ("isoS_randers", {"k1": 0.0, "k2": 1.0, "w": lambda t: 1.0}),
    ("isoS_2d", {"k1": 1.0, "k2": 1.0}),
    ("douglas_n3", {"k1": 1.0, "k2": 1.0, "k3": 1.0}),
    ("douglas_2d", {"sign": 2}),
    ("douglas_2d", {"bogus": 1}),
    ("missing", {}),
])
def test_recipe_invalid(kind, params):
    with pytest.raises(InvalidFamilyParams):
        recipe(kind, **params)


@pytest.mark.parametrize("sign", [1, -1])
def test_douglas_2d_v_simplification(sign):
    v = recipe("douglas_2d", sign=sign).v
    for t in (1e-3, 0.05, 0.2, 0.45):
        assert v(t) == pytest.approx(douglas_2d_v_literal(t, sign), rel=1e-10)
    # removable singularity: limit 9 s at t = 0
    assert v(0.0) == 9.0 * sign
    assert v(1e-9) == pytest.approx(douglas_2d_v_literal(1e-5, sign), rel=1e-4)


def test_form_check_examples():
    pts = num.ball_samples(2, 10, 0.5, seed=2)
    rep = form_check(euclidean(2), OneFormField(lambda x: x.copy(), jac=lambda x: np.eye(2)), pts)
    assert rep.is_conformal and rep.is_closed and np.allclose(rep.sigma, 1.0, atol=1e-12)
    rep = form_check(euclidean(2), constant_form([0.3, 0.1]), pts)
    assert rep.is_killing and rep.is_closed
    rep = form_check(euclidean(2), OneFormField(lambda x: np.array([x[1], 0.0])), pts)
    assert not rep.is_conformal
    assert rep.max_tracefree == pytest.approx(np.sqrt(0.5), abs=1e-8)


def test_form_check_flags_nested():
    chart = ConstCurvChart(0.3, 3)
    pts = num.ball_samples(3, 10, 0.5, seed=3)
    for beta in (smooth_form(3), constant_form([0.1, 0, 0]), OneFormField(lambda x: x.copy())):
        rep = form_check(chart, beta, pts)
        assert (not rep.is_killing or rep.is_homothetic) and (not rep.is_homothetic or rep.is_conformal)


def test_navigation_inverse_isotropic_relation():
    n = 3
    h = euclidean(n)
    rho = OneFormField(lambda x: x.copy(), jac=lambda x: np.eye(n))
    a, b = inverse_fields(h, rho, navigation_triple())
    pts = num.ball_samples(n, 10, 0.7, seed=4, inner=0.1)
    out = [isotropic_relation(a, b, x) for x in pts]
    assert max(r for r, _ in out) <= 1e-6
    # recovered 1-form has norm below 1 (Randers regime)
    assert max(norm_sq(a, b, x) for x in pts) < 1


@pytest.mark.parametrize("kind, params", [
    ("isoS_2d", {"k1": 0.0, "k2": 1.0}),
    ("douglas_n3", {"k1": 1.0, "k2": 1.0, "k3": 0.0}),
])
def test_parallel_form_stays_killing(kind, params):
    rng = np.random.default_rng(5)
    A = rng.standard_normal((3, 3))
    pair = deform_forward(constant_metric(A @ A.T + 3 * np.eye(3)), constant_form([0.2, 0.1, -0.3]),
                          recipe(kind, **params))
    rep = form_check(pair.h, pair.rho, num.ball_samples(3, 10, 0.5, seed=6))
    assert rep.max_sym <= 1e-8 and rep.is_killing
