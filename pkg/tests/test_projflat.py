import numpy as np
import pytest

from finsler_cvf import _numerics as num
from finsler_cvf.cvf import classify, lemma71_check, residual_pde
from finsler_cvf.errors import EmptyRegularRegion, InvalidFamilyParams, PreconditionViolation, SingularODE
from finsler_cvf.geom import norm_sq, r_s_decompose, sectional_curvature
from finsler_cvf.projflat import (
    Example72Params,
    analytic_f,
    build_example72,
    check_compatibility,
    eval_A1_A2,
    factor,
    factor_grad,
    factor_hess,
    ode_roots,
    residual_eq61,
    simple_family,
    solve_f_ode,
)


def simple_params(n):
    eta = np.zeros(n)
    eta[0] = 1.0
    return Example72Params(-0.25, 1.0, eta)


@pytest.fixture(scope="module", params=[2, 3])
def inst(request):
    return build_example72(simple_params(request.param))


def partial_fraction_f(tau, K, c0, f0):
    """Closed-form solution of f' = 2(c - tau) f / D(c) with D = -2(c - r1)(c - r2)."""
    r1, r2 = sorted(np.roots([-2.0, 2 * tau, K]).real)
    A = -(r1 - tau) / (r1 - r2)
    B = -(r2 - tau) / (r2 - r1)
    g = lambda c: np.abs(c - r1) ** A * np.abs(c - r2) ** B
    return lambda c: f0 * g(c) / g(c0)


def test_f_ode_reciprocal():
    f = solve_f_ode(1.0, -0.25, [0.0, 0.0], [1.0, 0.0], (0.5, 2.0), 1.0, 1.0)
    cs = np.linspace(0.5, 2.0, 301)
    assert np.abs(f(cs) - 1 / cs).max() <= 1e-8
    assert np.abs(f.d1(cs) + 1 / cs**2).max() <= 1e-8


@pytest.mark.parametrize("tau, mu, gamma, eta", [
    (0.3, 0.5, [0.0, 1.0], [0.5, 0.0]),
    (-0.2, 1.0, [0.4, 0.2], [0.1, 0.3]),
])
def test_f_ode_against_closed_form(tau, mu, gamma, eta):
    K = mu * np.dot(gamma, gamma) + np.dot(eta, gamma)
    roots = ode_roots(tau, mu, gamma, eta)
    lo, hi = roots[0] + 0.05, roots[1] - 0.05
    c0 = 0.5 * (lo + hi)
    f = solve_f_ode(tau, mu, gamma, eta, (lo, hi), c0, 1.3)
    ref = partial_fraction_f(tau, K, c0, 1.3)
    cs = np.linspace(lo, hi, 201)
    assert np.abs(f(cs) - ref(cs)).max() <= 1e-8


def test_f_ode_linear_in_f0():
    args = (0.3, 0.5, [0.0, 1.0], [0.5, 0.0], (-0.3, 0.5), 0.1)
    f1, f2 = solve_f_ode(*args, 1.0), solve_f_ode(*args, 2.0)
    cs = np.linspace(-0.3, 0.5, 50)
    assert np.allclose(f2(cs), 2 * f1(cs), rtol=1e-13, atol=0)


def test_f_ode_singular():
    with pytest.raises(SingularODE) as info:
        solve_f_ode(1.0, -0.25, [0.0, 0.0], [1.0, 0.0], (-0.5, 0.5), 0.3, 1.0)
    assert info.value.roots == (0.0, 1.0)


def test_compatibility_examples():
    for n in (2, 3, 4):
        assert check_compatibility(simple_params(n)).passed
    rep = check_compatibility(Example72Params(1.0, 1.0, [0.3, 0.0]))
    assert rep.rotation_residual == 0.0 and not rep.passed
    # for mu > 0 and gamma = 0 no real eta satisfies the norm condition
    assert 1.0 * (0 - 4 * 1.0**2) < 0


def test_params_validation():
    with pytest.raises(InvalidFamilyParams):
        Example72Params(0.0, 1.0, [1.0, 0.0])
    with pytest.raises(InvalidFamilyParams):
        Example72Params(-0.25, 1.0, [1.0, 0.0], Q=[[0, 1], [1, 0]])
    with pytest.raises(InvalidFamilyParams):
        Example72Params(-0.25, 0.0, [0.0, 0.0])


def test_factor_derivatives():
    p = Example72Params(0.7, 0.4, [0.2, -0.1, 0.3], gamma=[0.1, 0.5, -0.2])
    for x in num.ball_samples(3, 5, 0.5, seed=0):
        assert np.allclose(factor_grad(p, x), num.jacobian(lambda z: factor(p, z), x), atol=1e-10)
        assert np.allclose(factor_hess(p, x), num.jacobian(lambda z: factor_grad(p, z), x), atol=1e-9)


def test_build_origin_values():
    inst = build_example72(simple_params(2))
    x0 = np.zeros(2)
    assert inst.c(x0) == 1.0
    assert np.allclose(inst.beta.coeffs(x0), [1.0, 0.0])
    assert norm_sq(inst.chart, inst.beta, x0) == pytest.approx(0.25, abs=1e-15)


def test_build_rejects_incompatible():
    with pytest.raises(PreconditionViolation):
        build_example72(simple_params(2).perturbed(1.1))


def test_empty_regular_region():
    # |eta| large makes |beta|^2 exceed the margin everywhere
    p = Example72Params(-0.25, 1.0, [1.0, 0.0], c0=1.0, f0=4.0)
    with pytest.raises(EmptyRegularRegion):
        build_example72(p)


def test_instance_properties(inst):
    pts = inst.samples(30, radius=0.5)
    assert inst.radius >= 0.5 and inst.max_b2 <= 0.95
    assert max(np.abs(r_s_decompose(inst.chart, inst.beta, x)[1]).max() for x in pts) <= 1e-9
    assert lemma71_check(inst.chart, inst.beta, inst.c, pts, c_grad=inst.c_grad) <= 1e-9
    rep = classify(inst.chart, inst.beta, None, inst.V, pts)
    assert rep.classification == "conformal" and rep.factor_std >= 0.1
    rng = np.random.default_rng(1)
    n = inst.params.n
    for x in pts[:5]:
        assert sectional_curvature(inst.chart, x, rng.standard_normal(n), rng.standard_normal(n)) == \
            pytest.approx(inst.params.mu, abs=1e-5)


def test_first_equation_independent_of_compatibility():
    p = simple_params(3).perturbed(1.1)
    inst = build_example72(p, check=False)
    worst1, worst2 = 0.0, 0.0
    for x in inst.samples(20, radius=0.5):
        R1, R2 = residual_pde(inst.chart, inst.beta, inst.V, inst.c, x)
        worst1, worst2 = max(worst1, np.abs(R1).max()), max(worst2, np.abs(R2).max())
    assert worst1 <= 1e-7 and worst2 >= 1e-3


def test_A_vectors(inst):
    p = inst.params
    pts = inst.samples(100, radius=0.5)
    assert max(max(np.linalg.norm(a) for a in eval_A1_A2(p, inst.f, x)) for x in pts) <= 1e-8
    bad = p.perturbed(1.1)
    fb = analytic_f(bad)
    assert max(max(np.linalg.norm(a) for a in eval_A1_A2(bad, fb, x)) for x in pts) >= 1e-3


@pytest.mark.parametrize("seed", range(3))
def test_A_vectors_match_direct_residual(seed):
    # generic (incompatible) data and an arbitrary f: the two evaluations differ by (1 + mu|x|^2)^2
    rng = np.random.default_rng(seed)
    n = 3
    Q = rng.standard_normal((n, n))
    p = Example72Params(rng.uniform(-1, 1), rng.uniform(0.2, 1), rng.standard_normal(n) * 0.5,
                        rng.standard_normal(n) * 0.5, Q - Q.T)

    class F:
        def __call__(self, c):
            return np.sin(c) + 2.0

        def d1(self, c):
            return np.cos(c)

    f = F()
    from finsler_cvf.geom import OneFormField
    beta = OneFormField(lambda x: f(float(factor(p, x))) * factor_grad(p, x),
                        jac=lambda x: (f.d1(float(factor(p, x))) * np.outer(factor_grad(p, x), factor_grad(p, x))
                                       + f(float(factor(p, x))) * factor_hess(p, x)))
    for x in num.ball_samples(n, 50, 0.5, seed=seed):
        A1, A2 = eval_A1_A2(p, f, x)
        direct = residual_eq61(p, beta, x)
        assert np.abs(A1 * (x @ x) + A2 - (1 + p.mu * x @ x) ** 2 * direct).max() <= 1e-8


def test_numeric_f_instance():
    # tau = 0, Q = 0: compatibility reduces to |eta| = |mu gamma|
    mu = 0.5
    p = Example72Params(mu, 0.0, [mu, 0.0], gamma=[0.0, 1.0], c0=0.3, f0=1.0)
    assert check_compatibility(p).passed and p.ode_constant != 0
    inst = build_example72(p)
    assert inst.f.name == "f[numeric]"
    pts = inst.samples(30, radius=min(0.5, inst.radius))
    rep = classify(inst.chart, inst.beta, None, inst.V, pts)
    assert rep.max_residual <= 1e-6 and rep.classification == "conformal"
    assert max(max(np.linalg.norm(a) for a in eval_A1_A2(p, inst.f, x)) for x in pts) <= 1e-8


def test_simple_family():
    mu, tau, eta = -0.25, 1.0, np.array([1.0, 0.0])
    sf = simple_family(mu, tau, eta)
    assert np.allclose(sf.beta.coeffs(np.zeros(2)), eta / tau)
    ref = build_example72(Example72Params(mu, tau, eta, c0=tau, f0=1 / tau))
    pts = sf.samples(50, radius=0.5)
    for x in pts:
        assert np.abs(sf.beta.coeffs(x) - ref.beta.coeffs(x)).max() <= 1e-10
        assert np.allclose(sf.V(x), ref.V(x), atol=1e-14)
    rep = classify(sf.chart, sf.beta, None, sf.V, pts)
    assert rep.classification == "conformal" and rep.factor_std >= 0.1
    assert max(abs(rep.factor[k] - sf.c(x)) for k, x in enumerate(pts)) <= 1e-7


@pytest.mark.parametrize("mu, tau, eta", [(0.25, 1.0, [1.0, 0.0]), (-0.25, 1.0, [1.0, 0.1])])
def test_simple_family_precondition(mu, tau, eta):
    with pytest.raises(PreconditionViolation):
        simple_family(mu, tau, np.array(eta))
