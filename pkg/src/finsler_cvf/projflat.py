"""Non-homothetic conformal fields on locally projectively flat Randers spaces.

Ingredients, all on the chart ``alpha = 2|y| / (1 + mu|x|^2)``:

* ``c = (tau (1 - mu|x|^2) + <mu gamma + eta, x>) / (1 + mu|x|^2)``
* ``V = -2 (tau + <eta, x>) x + |x|^2 eta + Q x + gamma``
* ``b_i = f(c) dc/dx^i`` with ``f' = 2 (c - tau) f / D(c)``,
  ``D(c) = 2 tau c - 2 c^2 + mu|gamma|^2 + <eta, gamma>``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import _numerics as num
from .errors import EmptyRegularRegion, InvalidFamilyParams, PreconditionViolation, SingularODE
from .families import mobius_field
from .geom import ConstCurvChart, OneFormField

COMPAT_TOL = 1e-10


@dataclass(frozen=True)
class Example72Params:
    mu: float
    tau: float
    eta: np.ndarray
    gamma: np.ndarray = None
    Q: np.ndarray = None
    c0: float = None
    f0: float = None

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float)
        n = eta.size
        gamma = np.zeros(n) if self.gamma is None else np.array(self.gamma, dtype=float)
        Q = np.zeros((n, n)) if self.Q is None else np.array(self.Q, dtype=float)
        if self.mu == 0:
            raise InvalidFamilyParams("the construction needs mu != 0")
        if gamma.shape != (n,) or Q.shape != (n, n):
            raise InvalidFamilyParams("gamma / Q shapes do not match eta")
        if not np.array_equal(Q, -Q.T):
            raise InvalidFamilyParams("Q is not exactly skew-symmetric")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "tau", float(self.tau))
        c0 = self.tau if self.c0 is None else float(self.c0)
        object.__setattr__(self, "c0", c0)
        if self.f0 is None:
            if c0 == 0:
                raise InvalidFamilyParams("default normalisation f(c0) = 1/c0 needs c0 != 0")
            object.__setattr__(self, "f0", 1.0 / c0)

    @property
    def n(self):
        return self.eta.size

    @property
    def ode_constant(self):
        """``mu|gamma|^2 + <eta, gamma>``; zero means f = K/c exactly."""
        return self.mu * (self.gamma @ self.gamma) + self.eta @ self.gamma

    def perturbed(self, factor=1.1):
        return Example72Params(self.mu, self.tau, factor * self.eta, self.gamma, self.Q, self.c0, self.f0)

    def to_dict(self):
        return {"mu": self.mu, "tau": self.tau, "eta": self.eta.tolist(),
                "gamma": self.gamma.tolist(), "Q": self.Q.tolist(), "c0": self.c0, "f0": self.f0}


class ScalarFunction:
    """``f`` with derivative ``d1``; both accept scalars or arrays."""

    def __init__(self, f, df, name="f", valid=(-np.inf, np.inf)):
        self.f, self.df, self.name, self.valid = f, df, name, valid

    def __call__(self, c):
        return self.f(c)

    def d1(self, c):
        return self.df(c)


# --- the factor c --------------------------------------------------------------------


def factor(params, X):
    """``c`` at one point or at an (m, n) array of points."""
    X = np.asarray(X, dtype=float)
    r2 = np.sum(X * X, axis=-1)
    k = params.mu * params.gamma + params.eta
    return (params.tau * (1 - params.mu * r2) + X @ k) / (1 + params.mu * r2)


def factor_grad(params, X):
    X = np.asarray(X, dtype=float)
    mu, tau = params.mu, params.tau
    r2 = np.sum(X * X, axis=-1)[..., None]
    k = mu * params.gamma + params.eta
    N = tau * (1 - mu * r2) + (X @ k)[..., None]
    D = 1 + mu * r2
    return (-2 * mu * tau * X + k) / D - N * 2 * mu * X / D**2


def factor_hess(params, x):
    x = np.asarray(x, dtype=float)
    mu, tau, n = params.mu, params.tau, params.n
    k = mu * params.gamma + params.eta
    r2 = x @ x
    N = tau * (1 - mu * r2) + k @ x
    D = 1 + mu * r2
    Ni = -2 * mu * tau * x + k
    Di = 2 * mu * x
    Nij = -2 * mu * tau * np.eye(n)
    Dij = 2 * mu * np.eye(n)
    return (Nij / D - (np.outer(Ni, Di) + np.outer(Di, Ni)) / D**2
            - N * Dij / D**2 + 2 * N * np.outer(Di, Di) / D**3)


# --- f -------------------------------------------------------------------------------


def ode_denominator(tau, mu, gamma, eta, c):
    gamma = np.asarray(gamma, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return 2 * tau * c - 2 * c * c + mu * (gamma @ gamma) + eta @ gamma


def ode_roots(tau, mu, gamma, eta):
    K = mu * (np.asarray(gamma) @ np.asarray(gamma)) + np.asarray(eta) @ np.asarray(gamma)
    disc = tau * tau + 2 * K
    if disc < 0:
        return ()
    r = np.sqrt(disc)
    return tuple(sorted({(tau - r) / 2, (tau + r) / 2}))


def solve_f_ode(tau, mu, gamma, eta, c_range, c0, f0, step=5e-4):
    """Numerically solve ``f' = 2 (c - tau) f / D(c)`` with ``f(c0) = f0`` over ``c_range``.

    Fixed-step RK4, tabulated and interpolated by cubic Hermite splines
    (the derivative at each node comes from the equation itself).  When
    ``mu|gamma|^2 + <eta, gamma> = 0`` the root ``c = tau`` of ``D`` cancels
    against the numerator and the equation reads ``f' = -f / c``.
    """
    lo, hi = min(c_range[0], c0), max(c_range[1], c0)
    roots = ode_roots(tau, mu, gamma, eta)
    K = mu * (np.asarray(gamma) @ np.asarray(gamma)) + np.asarray(eta) @ np.asarray(gamma)
    removable = K == 0
    poles = (0.0,) if removable else roots
    bad = [r for r in poles if lo <= r <= hi]
    if bad:
        raise SingularODE(f"D(c) vanishes at {bad} inside [{lo:.6g}, {hi:.6g}]", roots=roots)

    if removable:
        def g(c):
            return -1.0 / c
    else:
        def g(c):
            return 2 * (c - tau) / ode_denominator(tau, mu, gamma, eta, c)

    def rhs(c, y):
        return g(c) * y

    pieces = []
    if lo < c0:
        cs, ys = num.rk4_path(rhs, f0, c0, lo, step)
        pieces.append((cs[::-1], ys[::-1]))
    if hi > c0:
        cs, ys = num.rk4_path(rhs, f0, c0, hi, step)
        if pieces:
            cs, ys = cs[1:], ys[1:]
        pieces.append((cs, ys))
    nodes = np.concatenate([p[0] for p in pieces])
    vals = np.concatenate([p[1] for p in pieces]).ravel()
    spline = CubicHermiteSpline(nodes, vals, g(nodes) * vals)

    def f(c):
        return spline(c)[()] if np.ndim(c) == 0 else spline(c)

    return ScalarFunction(f, lambda c: g(c) * f(c), name="f[numeric]", valid=(lo, hi))


def analytic_f(params):
    """``f = K / c`` (exact when ``mu|gamma|^2 + <eta, gamma> = 0``)."""
    K = params.f0 * params.c0
    return ScalarFunction(lambda c: K / c, lambda c: -K / c**2, name=f"{K:g}/c")


# --- compatibility and the A-vectors ------------------------------------------------


@dataclass
class CompatibilityReport:
    rotation_residual: float
    norm_residual: float
    tol: float = COMPAT_TOL

    @property
    def passed(self):
        return self.rotation_residual <= self.tol and self.norm_residual <= self.tol


def check_compatibility(params, tol=COMPAT_TOL):
    """Residuals of ``Q eta = -mu (4 tau gamma + Q gamma)`` and ``|eta|^2 = mu (mu|gamma|^2 - 4 tau^2)``."""
    mu, tau, eta, g, Q = params.mu, params.tau, params.eta, params.gamma, params.Q
    rot = Q @ eta + mu * (4 * tau * g + Q @ g)
    nrm = eta @ eta - mu * (mu * (g @ g) - 4 * tau * tau)
    return CompatibilityReport(float(np.abs(rot).max()), float(abs(nrm)), tol)


def eval_A1_A2(params, f, x):
    """The two vectors whose combination ``A1 |x|^2 + A2`` must vanish, evaluated literally."""
    mu, tau, eta, g, Q = params.mu, params.tau, params.eta, params.gamma, params.Q
    x = np.asarray(x, dtype=float)
    c = float(factor(params, x))
    F, dF = f(c), f.d1(c)
    e2, g2, eg = eta @ eta, g @ g, eta @ g
    Qeta, Qg = Q @ eta, Q @ g
    rot = 4 * mu * tau * g + Qeta + mu * Qg
    Dc = 2 * tau * c - 2 * c * c + mu * g2 + eg
    A1 = ((2 * mu * (c + tau) * x - eta - mu * g)
          * (2 * mu * c * c - 2 * mu * tau * c - 4 * mu * tau**2 - e2 - mu * eg) * dF
          + mu * (2 * (tau - c) * eta - 2 * mu * (tau + c) * g + 4 * mu * (c * c - tau**2) * x
                  - Qeta - mu * Qg) * F)
    A2 = ((2 * mu * (tau * dF + c * dF + F) * (rot @ x)
           - 2 * mu * (tau + c) * Dc * dF
           - 2 * (mu * mu * g2 - e2 - 2 * mu * tau**2 - 2 * mu * c * c) * F) * x
          - (eta + mu * g) * dF * (rot @ x)
          + (eta + mu * g) * Dc * dF
          + (2 * (tau - c) * eta - 2 * mu * (tau + c) * g - Qeta - mu * Qg) * F)
    return A1, A2


# --- instances -----------------------------------------------------------------------


@dataclass
class ProjFlatRandersInstance:
    params: Example72Params
    chart: ConstCurvChart
    c: object
    c_grad: object
    beta: OneFormField
    V: object
    f: ScalarFunction
    radius: float
    max_b2: float
    c_range: tuple
    notes: dict = field(default_factory=dict)

    def samples(self, count, seed=0, radius=None):
        return num.ball_samples(self.params.n, count, self.radius if radius is None else radius, seed)


def case_field(params):
    return mobius_field(params.tau, params.eta, params.Q, params.gamma)


def residual_eq61(params, beta, x):
    """``V^j d_j b_i + b_j d_i V^j + 2 c b_i`` with coordinate derivatives."""
    V = case_field(params)
    x = np.asarray(x, dtype=float)
    b = beta.coeffs(x)
    return beta.jac(x) @ V(x) + V.jac(x).T @ b + 2 * float(factor(params, x)) * b


def _grid(n, radius, resolution):
    ax = np.arange(-radius, radius + 0.5 * resolution, resolution)
    pts = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    return pts[np.linalg.norm(pts, axis=1) <= radius + 1e-12]


def _beta_from_f(params, f):
    def coeffs(x):
        return f(float(factor(params, x))) * factor_grad(params, x)

    def jac(x):
        c = float(factor(params, x))
        gc = factor_grad(params, x)
        return f.d1(c) * np.outer(gc, gc) + f(c) * factor_hess(params, x)

    return OneFormField(coeffs, jac=jac, name="beta[f(c) dc]")


def _scan_region(params, bvec, radius_max, resolution, margin, c_ok):
    """Largest centred ball (multiple of ``resolution``) where ``|beta|_alpha^2 <= margin``."""
    pts = _grid(params.n, radius_max, resolution)
    r = np.linalg.norm(pts, axis=1)
    D = 1 + params.mu * r * r
    cs = factor(params, pts)
    with np.errstate(all="ignore"):
        b = bvec(pts, cs)
        b2 = D**2 / 4 * np.sum(b * b, axis=1)
    ok = np.isfinite(b2) & (b2 <= margin) & (D > 0.5) & c_ok(cs)
    bad_r = r[~ok]
    limit = bad_r.min() if bad_r.size else np.inf
    radius = radius_max
    while radius >= resolution - 1e-12 and radius >= limit - 1e-12:
        radius -= resolution
    radius = round(radius / resolution) * resolution
    if radius < resolution - 1e-12:
        raise EmptyRegularRegion(f"no ball of radius >= {resolution} keeps |beta|^2 <= {margin}")
    inside = r <= radius + 1e-12
    return radius, float(b2[inside].max()), (float(cs[inside].min()), float(cs[inside].max()))


def build_example72(params, radius_max=0.8, resolution=0.05, margin=0.95, check=True):
    """Assemble chart, c, beta = f(c) dc and V, and locate the regular ball."""
    if check and not check_compatibility(params).passed:
        raise PreconditionViolation("parameters violate the compatibility conditions")
    chart = ConstCurvChart(params.mu, params.n)
    sign0 = np.sign(params.c0)
    if params.ode_constant == 0:
        f = analytic_f(params)
        c_ok = lambda cs: np.sign(cs) == sign0
    else:
        # c-range over the candidate ball, shrunk until the ODE is regular there
        rmax = radius_max
        roots = ode_roots(params.tau, params.mu, params.gamma, params.eta)
        while True:
            pts = _grid(params.n, rmax, resolution)
            cs = factor(params, pts)
            lo, hi = cs.min(), cs.max()
            pad = 0.1 * (hi - lo)
            lo, hi = lo - pad, hi + pad
            if not any(min(lo, params.c0) <= z <= max(hi, params.c0) for z in roots):
                break
            rmax -= resolution
            if rmax < resolution - 1e-12:
                raise EmptyRegularRegion("the f-equation is singular on every candidate ball")
        radius_max = rmax
        f = solve_f_ode(params.tau, params.mu, params.gamma, params.eta, (lo, hi), params.c0, params.f0)
        c_ok = lambda cs: (cs >= f.valid[0]) & (cs <= f.valid[1])
    bvec = lambda pts, cs: np.asarray(f(cs))[:, None] * factor_grad(params, pts)
    radius, max_b2, c_range = _scan_region(params, bvec, radius_max, resolution, margin, c_ok)
    return ProjFlatRandersInstance(
        params, chart,
        c=lambda x: float(factor(params, x)),
        c_grad=lambda x: factor_grad(params, x),
        beta=_beta_from_f(params, f),
        V=case_field(params),
        f=f, radius=radius, max_b2=max_b2, c_range=c_range,
    )


def simple_beta(mu, tau, eta):
    """Closed-form ``beta`` of the gamma = 0, Q = 0 family (coefficients of y)."""
    eta = np.asarray(eta, dtype=float)

    def coeffs(x):
        x = np.asarray(x, dtype=float)
        D = 1 + mu * (x @ x)
        N = tau * (1 - mu * (x @ x)) + eta @ x
        return (eta - 2 * mu * (2 * tau + eta @ x) * x / D) / N

    return OneFormField(coeffs, name="beta[simple]")


def simple_family(mu, tau, eta, radius_max=0.8, resolution=0.05, margin=0.95):
    """The closed-form family with ``gamma = 0``, ``Q = 0``, ``f = 1/c``."""
    eta = np.asarray(eta, dtype=float)
    if not mu < 0:
        raise PreconditionViolation("the simple family needs mu < 0")
    if abs(eta @ eta + 4 * mu * tau * tau) > COMPAT_TOL:
        raise PreconditionViolation(f"|eta|^2 = {eta @ eta} but -4 mu tau^2 = {-4 * mu * tau * tau}")
    params = Example72Params(mu, tau, eta, c0=tau, f0=1.0 / tau)
    chart = ConstCurvChart(mu, eta.size)
    beta = simple_beta(mu, tau, eta)
    bvec = lambda pts, cs: np.array([beta.coeffs(p) for p in pts])
    c_ok = lambda cs: np.sign(cs) == np.sign(tau)
    radius, max_b2, c_range = _scan_region(params, bvec, radius_max, resolution, margin, c_ok)

    def c(x):
        x = np.asarray(x, dtype=float)
        return (tau * (1 - mu * (x @ x)) + eta @ x) / (1 + mu * (x @ x))

    def V(x):
        x = np.asarray(x, dtype=float)
        return -2 * (tau + eta @ x) * x + (x @ x) * eta

    from .geom import VectorField
    return ProjFlatRandersInstance(
        params, chart, c=c, c_grad=lambda x: factor_grad(params, x), beta=beta,
        V=VectorField(V, name="V[simple]"), f=analytic_f(params),
        radius=radius, max_b2=max_b2, c_range=c_range,
    )
