"""Finsler (alpha, beta) layer: phi-function families, F evaluation, regularity."""
from dataclasses import dataclass, field

import numpy as np

from . import _numerics as num
from .errors import DomainViolation, InvalidFamilyParams, ODESingularity
from .geom import as_point, inverse

LEADING_COEFF_FLOOR = 1e-6


@dataclass(frozen=True)
class PhiFunction:
    """``phi`` together with its first two derivatives on ``[-s_max, s_max]``."""

    phi: object
    dphi: object
    ddphi: object
    s_max: float
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.phi(0.0) - 1.0) > 1e-12:
            raise InvalidFamilyParams(f"{self.kind}: phi(0) = {self.phi(0.0)!r}, expected 1")

    def __call__(self, s):
        return self.phi(s)


def _randers():
    return PhiFunction(lambda s: 1.0 + s, lambda s: 1.0, lambda s: 0.0, 1.0, "randers")


def _f0_type(sign=1, s_max=None):
    if sign not in (1, -1):
        raise InvalidFamilyParams("f0_type sign must be +1 or -1")
    if s_max is None:
        s_max = 0.99 if sign < 0 else 10.0
    return PhiFunction(
        lambda s: 1.0 + sign * s * s,
        lambda s: 2.0 * sign * s,
        lambda s: 2.0 * sign,
        float(s_max),
        "f0_type",
        {"sign": sign},
    )


def _factor_interval(ks, cap):
    """Largest symmetric s-interval on which every ``1 + k s^2`` stays above the floor."""
    s_max = cap
    for k in ks:
        if k < 0:
            s_max = min(s_max, np.sqrt((1.0 - LEADING_COEFF_FLOOR) / -k))
    return float(s_max)


def _isoS_2d(k1, k2, sign=1, s_max=None, nodes=48):
    if not k2 > k1:
        raise InvalidFamilyParams(f"isoS_2d requires k2 > k1, got k1={k1}, k2={k2}")
    if sign not in (1, -1):
        raise InvalidFamilyParams("isoS_2d branch sign must be +1 or -1")
    cap = 1.0 if s_max is None else s_max
    s_max = _factor_interval((k1, k2), cap)
    root = sign * np.sqrt(k2 - k1)

    def theta(s):
        s = np.asarray(s, dtype=float)
        return root / (2.0 * (1.0 + k1 * s * s) * np.sqrt(1.0 + k2 * s * s))

    def dtheta(s):
        return theta(s) * (-2.0 * k1 * s / (1.0 + k1 * s * s) - k2 * s / (1.0 + k2 * s * s))

    def phi(s):
        base = ((1.0 + k1 * s * s) * (1.0 + k2 * s * s)) ** 0.25
        return float(base * np.exp(num.gauss_legendre(theta, 0.0, s, nodes)))

    def dlog(s):
        return 0.5 * (k1 * s / (1.0 + k1 * s * s) + k2 * s / (1.0 + k2 * s * s)) + float(theta(s))

    def ddlog(s):
        return 0.5 * (
            k1 * (1.0 - k1 * s * s) / (1.0 + k1 * s * s) ** 2
            + k2 * (1.0 - k2 * s * s) / (1.0 + k2 * s * s) ** 2
        ) + float(dtheta(s))

    return PhiFunction(
        phi,
        lambda s: phi(s) * dlog(s),
        lambda s: phi(s) * (ddlog(s) + dlog(s) ** 2),
        s_max,
        "isoS_2d",
        {"k1": k1, "k2": k2, "sign": sign, "nodes": nodes},
    )


def douglas_leading(k1, k2, k3, s):
    return 1.0 + (k1 + k3) * s * s + k2 * s**4


def _douglas_ode(k1, k2, k3, p0=0.0, s_max=0.7, strict=True, step=1e-3):
    if strict and k2 == k1 * k3:
        raise InvalidFamilyParams("douglas_ode requires k2 != k1*k3 (otherwise phi is Riemannian)")
    # roots of k2 z^2 + (k1+k3) z + 1 in z = s^2 within [0, s_max^2]
    z = np.roots([k2, k1 + k3, 1.0]) if k2 != 0 else (
        np.array([-1.0 / (k1 + k3)]) if (k1 + k3) != 0 else np.array([])
    )
    for r in np.atleast_1d(z):
        if abs(r.imag) < 1e-14 and 0.0 <= r.real <= s_max**2 * (1 + 1e-12):
            raise ODESingularity(f"leading coefficient vanishes at s = {np.sqrt(r.real):.6g}")

    def second(s, y, dy):
        return (k1 + k2 * s * s) * (y - s * dy) / douglas_leading(k1, k2, k3, s)

    table = num.HermiteTable(second, 0.0, 1.0, p0, -s_max, s_max, max_step=step)
    coarse = num.HermiteTable(second, 0.0, 1.0, p0, -s_max, s_max, max_step=2 * step)
    # Richardson estimate of the RK4 error: (coarse - fine) / (2^4 - 1)
    err = max(abs(table(s) - coarse(s)) for s in table.nodes[::10]) / 15.0
    return PhiFunction(
        table,
        table.d1,
        table.d2,
        float(s_max),
        "douglas_ode",
        {"k1": k1, "k2": k2, "k3": k3, "p0": p0, "error_estimate": err},
    )


_FAMILIES = {
    "randers": _randers,
    "f0_type": _f0_type,
    "isoS_2d": _isoS_2d,
    "douglas_ode": _douglas_ode,
}


def phi_family(kind, **params):
    """Build a named phi family.

    >>> phi_family("randers")(0.25)
    1.25
    """
    try:
        build = _FAMILIES[kind]
    except KeyError:
        raise InvalidFamilyParams(f"unknown phi family {kind!r}") from None
    try:
        return build(**params)
    except TypeError as exc:
        raise InvalidFamilyParams(f"{kind}: {exc}") from None


def douglas_ode_residual(phi, s):
    k1, k2, k3 = phi.params["k1"], phi.params["k2"], phi.params["k3"]
    return douglas_leading(k1, k2, k3, s) * phi.ddphi(s) - (k1 + k2 * s * s) * (
        phi.phi(s) - s * phi.dphi(s)
    )


def is_riemannian_type(phi, tol=1e-9, n_points=5):
    """True when ``(phi^2)''`` is constant on sample points, i.e. phi = sqrt(1 + k s^2)."""
    ss = np.linspace(-0.8, 0.8, n_points) * phi.s_max
    vals = [2.0 * (phi.dphi(s) ** 2 + phi.phi(s) * phi.ddphi(s)) for s in ss]
    # phi(0) = 1 and phi'(0) = 0 are forced for sqrt(1 + k s^2)
    return bool(np.ptp(vals) <= tol and abs(phi.dphi(0.0)) <= tol)


def check_non_riemannian(phi, tol=1e-9):
    if is_riemannian_type(phi, tol):
        raise InvalidFamilyParams(f"{phi.kind}: phi is of the form sqrt(1 + k s^2)")
    return phi


@dataclass(frozen=True)
class AlphaBetaMetric:
    metric: object
    beta: object
    phi: PhiFunction

    def s_value(self, x, y):
        x = as_point(x)
        y = np.asarray(y, dtype=float)
        alpha = np.sqrt(y @ self.metric.coeffs(x) @ y)
        if not alpha > 0:
            raise DomainViolation("alpha(x, y) must be positive")
        return alpha, (self.beta.coeffs(x) @ y) / alpha

    def __call__(self, x, y):
        return eval_F(self, x, y)


def eval_F(F, x, y):
    alpha, s = F.s_value(x, y)
    if abs(s) > F.phi.s_max:
        raise DomainViolation(f"|s| = {abs(s):.6g} exceeds phi interval {F.phi.s_max:.6g}")
    return float(alpha * F.phi(s))


@dataclass
class RegularityReport:
    passed: bool
    min_phi: float
    min_convexity: float
    worst_point: object
    n_points: int


def regularity_check(F, sample_points, sample_s=21):
    """Check ``phi > 0`` and ``phi - s phi' + (b^2 - s^2) phi'' > 0`` for |s| <= b."""
    min_phi = np.inf
    min_conv = np.inf
    worst = None
    for x in sample_points:
        b = F.beta.coeffs(x)
        b2 = float(b @ inverse(F.metric, x) @ b)
        bb = np.sqrt(b2)
        if bb > F.phi.s_max:
            min_phi, worst = -np.inf, np.asarray(x)
            continue
        for s in np.linspace(-bb, bb, sample_s):
            p = F.phi(s)
            conv = p - s * F.phi.dphi(s) + (b2 - s * s) * F.phi.ddphi(s)
            if min(p, conv) < min(min_phi, min_conv):
                worst = np.asarray(x)
            min_phi = min(min_phi, p)
            min_conv = min(min_conv, conv)
    passed = bool(min_phi > 0 and min_conv > 0)
    return RegularityReport(passed, float(min_phi), float(min_conv), worst, len(sample_points))
