"""The (alpha, beta) -> (h, rho) deformation ``h^2 = u a^2 + v b^2``, ``rho = w beta``.

All three scalar functions are evaluated at ``t = b^2 = ||beta||_alpha^2``.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _numerics as num
from .errors import (
    AmbiguousFixedPoint,
    InvalidFamilyParams,
    NoFixedPoint,
    NotPositiveDefinite,
    SingularMetric,
)
from .geom import MetricField, OneFormField, _spd_inverse, as_point, covdiff_oneform, inverse, r_s_decompose

FORM_ATOL = 1e-6
FORM_RTOL = 1e-6


@dataclass(frozen=True)
class DeformationTriple:
    """``(u, v, w)`` as functions of ``t`` with optional analytic derivatives."""

    u: object
    v: object
    w: object
    du: object = None
    dv: object = None
    dw: object = None
    interval: tuple = (0.0, np.inf)
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.interval
        top = hi if np.isfinite(hi) else lo + 10.0
        for t in np.linspace(lo, top, 103)[1:-1]:
            if self.u(t) == 0 or self.w(t) == 0:
                raise InvalidFamilyParams(f"{self.name}: u or w vanishes at t = {t:.6g}")

    def derivs(self, t):
        d = []
        for f, df in ((self.u, self.du), (self.v, self.dv), (self.w, self.dw)):
            d.append(df(t) if df is not None else num.derivative_1d(f, t))
        return d

    def __call__(self, t):
        return self.u(t), self.v(t), self.w(t)


IDENTITY = DeformationTriple(
    lambda t: 1.0, lambda t: 0.0, lambda t: 1.0,
    lambda t: 0.0, lambda t: 0.0, lambda t: 0.0,
    interval=(0.0, np.inf), name="identity",
)


@dataclass(frozen=True)
class DeformedPair:
    h: MetricField
    rho: OneFormField
    triple: DeformationTriple


def _b2_and_grad(metric, beta, x):
    ainv = inverse(metric, x)
    b = beta.coeffs(x)
    bup = ainv @ b
    t = float(b @ bup)
    dt = -np.einsum("p,q,pqk->k", bup, bup, metric.grad(x)) + 2.0 * bup @ beta.jac(x)
    return t, dt


def deform_forward(metric, beta, triple):
    """Return ``(h, rho)`` as lazily evaluated fields with chain-rule derivatives."""

    def h_coeffs(x):
        a = metric.coeffs(x)
        b = beta.coeffs(x)
        t = float(b @ _spd_inverse(a) @ b)
        u, v, _ = triple(t)
        if u <= 0 or u + v * t <= 0:
            raise NotPositiveDefinite(
                f"{triple.name}: u = {u:.6g}, u + v b^2 = {u + v * t:.6g} at b^2 = {t:.6g}"
            )
        return u * a + v * np.outer(b, b)

    def h_grad(x):
        a = metric.coeffs(x)
        b = beta.coeffs(x)
        t, dt = _b2_and_grad(metric, beta, x)
        u, v, _ = triple(t)
        du, dv, _ = triple.derivs(t)
        db = beta.jac(x)
        bdb = np.einsum("ik,j->ijk", db, b)
        return (
            du * np.einsum("ij,k->ijk", a, dt)
            + u * metric.grad(x)
            + dv * np.einsum("i,j,k->ijk", b, b, dt)
            + v * (bdb + bdb.transpose(1, 0, 2))
        )

    def p_coeffs(x):
        b = beta.coeffs(x)
        t = float(b @ inverse(metric, x) @ b)
        return triple.w(t) * b

    def p_jac(x):
        t, dt = _b2_and_grad(metric, beta, x)
        _, _, dw = triple.derivs(t)
        return triple.w(t) * beta.jac(x) + dw * np.outer(beta.coeffs(x), dt)

    h = MetricField(h_coeffs, grad=h_grad, name=f"h[{triple.name}]")
    rho = OneFormField(p_coeffs, jac=p_jac, name=f"rho[{triple.name}]")
    return DeformedPair(h, rho, triple)


@dataclass
class PointwiseInverse:
    a: np.ndarray
    b: np.ndarray
    t: float
    roots: tuple


def _inverse_residual(triple, rho2, t):
    u, v, w = triple(t)
    B = rho2 / w**2
    return u * B / (1.0 - v * B) - t


def deform_inverse(h, p, triple, bracket=None, scan=512, xtol=1e-14):
    """Pointwise inverse: recover ``(a_ij, b_i)`` from ``(h_ij, p_i)`` at one point.

    ``b^2 = t`` solves ``t = u(t) B / (1 - v(t) B)`` with ``B = |p|_h^2 / w(t)^2``
    (Sherman-Morrison on ``a = (h - v b b^T) / u``).  Roots are bracketed by a
    scan and polished with Brent's method.
    """
    h = np.asarray(h, dtype=float)
    p = np.asarray(p, dtype=float)
    hinv = _spd_inverse(h)
    rho2 = float(p @ hinv @ p)
    if rho2 == 0.0:
        u0 = triple.u(0.0)
        return PointwiseInverse(h / u0, np.zeros_like(p), 0.0, (0.0,))

    lo, hi = bracket if bracket is not None else triple.interval
    lo = max(lo, 1e-9)
    if not np.isfinite(hi):
        hi = max(4.0 * rho2 * max(1.0, 1.0 / triple.w(lo) ** 2), 1.0)
    else:
        hi = hi - 1e-9
    ts = np.linspace(lo, hi, scan)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.array([_inverse_residual(triple, rho2, t) for t in ts])
    roots = []
    for i in range(scan - 1):
        if not (np.isfinite(g[i]) and np.isfinite(g[i + 1])):
            continue
        if g[i] == 0.0:
            roots.append(ts[i])
        elif g[i] * g[i + 1] < 0:
            roots.append(brentq(lambda t: _inverse_residual(triple, rho2, t), ts[i], ts[i + 1],
                                xtol=xtol, rtol=4 * np.finfo(float).eps))
    if g[-1] == 0.0:
        roots.append(ts[-1])
    if not roots:
        raise NoFixedPoint(f"{triple.name}: no b^2 in [{lo:.3g}, {hi:.3g}] inverts the deformation")
    if len(roots) > 1:
        warnings.warn(f"{triple.name}: {len(roots)} admissible b^2 values {roots}; using the smallest",
                      AmbiguousFixedPoint, stacklevel=2)
    t = min(roots)
    u, v, w = triple(t)
    b = p / w
    a = (h - v * np.outer(b, b)) / u
    try:
        _spd_inverse(a)
    except SingularMetric as exc:
        raise NotPositiveDefinite(f"recovered alpha is not positive definite at b^2 = {t:.6g}") from exc
    return PointwiseInverse(a, b, float(t), tuple(float(r) for r in roots))


def inverse_fields(h, rho, triple, **kw):
    """Lift :func:`deform_inverse` to fields; derivatives come from finite differences."""
    return (
        MetricField(lambda x: deform_inverse(h.coeffs(x), rho.coeffs(x), triple, **kw).a,
                    name=f"alpha[{triple.name}^-1]"),
        OneFormField(lambda x: deform_inverse(h.coeffs(x), rho.coeffs(x), triple, **kw).b,
                     name=f"beta[{triple.name}^-1]"),
    )


# --- named recipes -----------------------------------------------------------------


def _isoS_randers(k1, k2, w, dw=None, t_min=1e-3):
    if k1 == 0:
        raise InvalidFamilyParams("isoS_randers needs k1 != 0")
    dw = dw if dw is not None else (lambda t: num.derivative_1d(w, t))
    return DeformationTriple(
        lambda t: k2 * w(t),
        lambda t: (k1 - (k1 + k2) / t) * w(t),
        w,
        lambda t: k2 * dw(t),
        lambda t: (k1 + k2) / t**2 * w(t) + (k1 - (k1 + k2) / t) * dw(t),
        dw,
        interval=(t_min, 1.0),
        name="isoS_randers",
        params={"k1": k1, "k2": k2},
    )


def navigation_triple():
    """``(1 - t, t - 1, t - 1)``: isoS_randers with k1 = 1, k2 = -1, w = t - 1."""
    return _isoS_randers(1.0, -1.0, lambda t: t - 1.0, lambda t: 1.0)


def _positive_interval(ks):
    hi = np.inf
    for k in ks:
        if k < 0:
            hi = min(hi, -1.0 / k)
    return (0.0, hi)


def _isoS_2d(k1, k2):
    if not k2 > k1:
        raise InvalidFamilyParams("isoS_2d requires k2 > k1")

    def w(t):
        return (1 + k1 * t) ** -0.75 * (1 + k2 * t) ** -0.25

    def dw(t):
        return w(t) * (-0.75 * k1 / (1 + k1 * t) - 0.25 * k2 / (1 + k2 * t))

    return DeformationTriple(
        lambda t: 1.0, lambda t: 0.0, w, lambda t: 0.0, lambda t: 0.0, dw,
        interval=_positive_interval((k1, k2)), name="isoS_2d", params={"k1": k1, "k2": k2},
    )


def _douglas_n3(k1, k2, k3, strict=True):
    if strict and k2 == k1 * k3:
        raise InvalidFamilyParams("douglas_n3 requires k2 != k1*k3")

    def den(t):
        return 1.0 + (k1 + k3) * t + k2 * t * t

    def integrand(t):
        return 0.5 * (k3 + k2 * t) / den(t)

    # positive part of the interval where den > 0
    roots = [r.real for r in np.atleast_1d(np.roots([k2, k1 + k3, 1.0]) if k2 else
             ([-1.0 / (k1 + k3)] if k1 + k3 else [])) if abs(np.imag(r)) < 1e-14 and r.real > 0]
    hi = min(roots) if roots else np.inf

    def w(t):
        return float(np.exp(-num.gauss_legendre(integrand, 0.0, t)))

    return DeformationTriple(
        lambda t: 1.0, lambda t: 0.0, w, lambda t: 0.0, lambda t: 0.0,
        lambda t: -integrand(t) * w(t),
        interval=(0.0, hi), name="douglas_n3", params={"k1": k1, "k2": k2, "k3": k3},
    )


def _douglas_2d(sign=1):
    if sign not in (1, -1):
        raise InvalidFamilyParams("douglas_2d sign must be +1 or -1")
    s = float(sign)

    def u(t):
        return (1 - s * t) ** 3 / (1 + 2 * s * t) ** 1.5

    # the 1/t in front of the bracket cancels exactly:
    # (1+2st)^3 - (1 - 2st + 4t^2) = 8t (s + t + s t^2)
    def v(t):
        return 9.0 * (s + t + s * t * t) / (1 + 2 * s * t) ** 1.5

    def du(t):
        return u(t) * (-3 * s / (1 - s * t) - 3 * s / (1 + 2 * s * t))

    def dv(t):
        return 9.0 * (1 + 2 * s * t) / (1 + 2 * s * t) ** 1.5 - 3 * s * v(t) / (1 + 2 * s * t)

    hi = 0.5 if s < 0 else 1.0
    return DeformationTriple(
        u, v, lambda t: 1.0, du, dv, lambda t: 0.0,
        interval=(0.0, hi), name="douglas_2d", params={"sign": sign},
    )


def douglas_2d_v_literal(t, sign=1):
    """Unsimplified ``v`` of the 2-d Douglas recipe (singular at t = 0)."""
    s = sign
    return 9.0 / (8.0 * t) * ((1 + 2 * s * t) ** 1.5 - (1 - 2 * s * t + 4 * t * t) / (1 + 2 * s * t) ** 1.5)


_RECIPES = {
    "isoS_randers": _isoS_randers,
    "isoS_2d": _isoS_2d,
    "douglas_n3": _douglas_n3,
    "douglas_2d": _douglas_2d,
}


def recipe(kind, **params):
    try:
        build = _RECIPES[kind]
    except KeyError:
        raise InvalidFamilyParams(f"unknown recipe {kind!r}") from None
    try:
        return build(**params)
    except TypeError as exc:
        raise InvalidFamilyParams(f"{kind}: {exc}") from None


# --- conformal / closed / Killing tests for 1-forms ----------------------------------


@dataclass
class FormCheckReport:
    is_closed: bool
    is_conformal: bool
    is_homothetic: bool
    is_killing: bool
    sigma: np.ndarray
    max_tracefree: float
    max_antisym: float
    max_sym: float
    tol: float
    rtol: float


def form_check(h, rho, sample_points, tol=FORM_ATOL, rtol=FORM_RTOL):
    """Classify ``rho`` against ``h`` from its symmetrised covariant derivative."""
    sig, tf, anti, sym = [], [], [], []
    conformal = True
    for x in sample_points:
        x = as_point(x)
        dp = covdiff_oneform(h, rho, x)
        r = 0.5 * (dp + dp.T)
        s = 0.5 * (dp - dp.T)
        hx = h.coeffs(x)
        sigma = float(np.sum(inverse(h, x) * r)) / x.size
        tfree = np.linalg.norm(r - sigma * hx)
        rn = np.linalg.norm(r)
        conformal &= bool(tfree <= tol + rtol * rn)
        sig.append(sigma)
        tf.append(tfree)
        anti.append(np.linalg.norm(s))
        sym.append(rn)
    sig = np.array(sig)
    closed = bool(max(anti) <= tol)
    homothetic = bool(conformal and np.var(sig) <= tol)
    killing = bool(homothetic and max(sym) <= tol)
    return FormCheckReport(closed, conformal, homothetic, killing, sig,
                           float(max(tf)), float(max(anti)), float(max(sym)), tol, rtol)


def isotropic_relation(metric, beta, x):
    """Residual of ``r_ij = 2 theta (a_ij - b_i b_j) - b_i s_j - b_j s_i`` with ``theta`` from the trace.

    Contracting with ``a^ij`` kills the ``s`` terms, so
    ``theta = a^ij r_ij / (2 (n - b^2))``.  Returns ``(max |residual|, theta)``.
    """
    x = as_point(x)
    r, _, s_j = r_s_decompose(metric, beta, x)
    a = metric.coeffs(x)
    b = beta.coeffs(x)
    ainv = inverse(metric, x)
    b2 = float(b @ ainv @ b)
    theta = float(np.sum(ainv * r)) / (2.0 * (x.size - b2))
    res = r - 2.0 * theta * (a - np.outer(b, b)) + np.outer(b, s_j) + np.outer(s_j, b)
    return float(np.abs(res).max()), theta
