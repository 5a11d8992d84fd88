"""Explicit conformal 1-forms and homothetic fields on constant-curvature charts.

Matrices act on coordinates as ``(M x)^i``; that single convention is used
for ``P`` in the 1-form and ``Q`` in the vector fields, and every constraint
below is written (and verified) under it.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from . import _numerics as num
from .alphabeta import check_non_riemannian, phi_family, regularity_check, AlphaBetaMetric
from .cvf import classify, residual_deformed
from .deform import IDENTITY, deform_forward
from .errors import CaseMismatch, ConstraintViolation, DomainViolation, PreconditionViolation
from .geom import ConstCurvChart, OneFormField, VectorField, as_point, norm_sq

CONSTRAINT_TOL = 1e-10
CASES = ("i", "ii", "iii")


def _vec(v, n):
    v = np.zeros(n) if v is None else np.array(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"expected a vector of length {n}, got shape {v.shape}")
    return v


def _skew(M, n, name):
    M = np.zeros((n, n)) if M is None else np.array(M, dtype=float)
    if M.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}")
    if not np.array_equal(M, -M.T):
        raise ValueError(f"{name} is not exactly skew-symmetric")
    return M


@dataclass(frozen=True)
class Theorem12Params:
    n: int
    mu: float = 0.0
    lam: float = 0.0
    tau: float = 0.0
    d: np.ndarray = None
    e: np.ndarray = None
    gamma: np.ndarray = None
    eta: np.ndarray = None
    P: np.ndarray = None
    Q: np.ndarray = None

    def __post_init__(self):
        n = self.n
        for name in ("d", "e", "gamma", "eta"):
            object.__setattr__(self, name, _vec(getattr(self, name), n))
        object.__setattr__(self, "P", _skew(self.P, n, "P"))
        object.__setattr__(self, "Q", _skew(self.Q, n, "Q"))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "tau", float(self.tau))

    def scale_rho(self, s):
        """Scale the 1-form data (lam, d, e, P); every constraint is linear in it."""
        return replace(self, lam=s * self.lam, d=s * self.d, e=s * self.e, P=s * self.P)

    def to_dict(self):
        return {
            "n": self.n, "mu": self.mu, "lam": self.lam, "tau": self.tau,
            "d": self.d.tolist(), "e": self.e.tolist(), "gamma": self.gamma.tolist(),
            "eta": self.eta.tolist(), "P": self.P.tolist(), "Q": self.Q.tolist(),
        }


# --- fields ------------------------------------------------------------------------


def rho_theorem12(mu, lam, d, e, P, x):
    x = as_point(x)
    D = 1.0 + mu * (x @ x)
    if D <= 0:
        raise DomainViolation(f"1 + mu|x|^2 = {D:.3g} <= 0")
    q = -2.0 * (lam + d @ x) * x + (x @ x) * d + P @ x + e
    return 4.0 / D**2 * q


def rho_field(params):
    mu, lam, d, e, P = params.mu, params.lam, params.d, params.e, params.P
    n = params.n

    def jac(x):
        D = 1.0 + mu * (x @ x)
        q = -2.0 * (lam + d @ x) * x + (x @ x) * d + P @ x + e
        dq = (-2.0 * np.outer(x, d) - 2.0 * (lam + d @ x) * np.eye(n)
              + 2.0 * np.outer(d, x) + P)
        return 4.0 / D**2 * dq + np.outer(q, -16.0 * mu * x / D**3)

    return OneFormField(lambda x: rho_theorem12(mu, lam, d, e, P, x), jac=jac, name="rho")


def mobius_field(lam, d, Q, eta):
    """``V = -2(lam + <d,x>) x + |x|^2 d + Q x + eta`` with its analytic Jacobian."""
    d = np.asarray(d, dtype=float)
    eta = np.asarray(eta, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = d.size

    def comps(x):
        return -2.0 * (lam + d @ x) * x + (x @ x) * d + Q @ x + eta

    def jac(x):
        return (-2.0 * np.outer(x, d) - 2.0 * (lam + d @ x) * np.eye(n)
                + 2.0 * np.outer(d, x) + Q)

    return VectorField(comps, jac=jac, name="mobius")


def mobius_factor(mu, lam, d, eta):
    d = np.asarray(d, dtype=float)
    eta = np.asarray(eta, dtype=float)

    def c(x):
        x = np.asarray(x, dtype=float)
        r2 = x @ x
        return (lam * (1.0 - mu * r2) + (mu * eta + d) @ x) / (1.0 + mu * r2)

    return c


def conformal_field_riemann(variant, lam, vec, mu, eta=None, Q=None):
    """Conformal fields of the constant-curvature chart and their factor.

    ``variant="general"``: ``vec`` is d, with translation ``eta`` and rotation ``Q``.
    ``variant="closed"``: ``vec`` is e; the dual 1-form of the field is closed.
    Returns ``(V, c)`` as a :class:`VectorField` and a callable.
    """
    vec = np.asarray(vec, dtype=float)
    n = vec.size
    if variant == "general":
        eta = np.zeros(n) if eta is None else np.asarray(eta, dtype=float)
        Q = np.zeros((n, n)) if Q is None else np.asarray(Q, dtype=float)
        return mobius_field(lam, vec, Q, eta), mobius_factor(mu, lam, vec, eta)
    if variant == "closed":
        e = vec

        def comps(x):
            return -2.0 * (lam + mu * (e @ x)) * x + (1.0 + mu * (x @ x)) * e

        def jac(x):
            return (-2.0 * mu * np.outer(x, e) - 2.0 * (lam + mu * (e @ x)) * np.eye(n)
                    + 2.0 * mu * np.outer(e, x))

        def c(x):
            x = np.asarray(x, dtype=float)
            r2 = x @ x
            return (lam * (1.0 - mu * r2) + 2.0 * mu * (e @ x)) / (1.0 + mu * r2)

        return VectorField(comps, jac=jac, name="closed-conformal"), c
    raise ValueError(f"unknown variant {variant!r}")


def _case_field_data(case, p):
    """(lam, d, eta) arguments of :func:`mobius_field` for each case."""
    if case == "i":
        return p.tau, np.zeros(p.n), p.gamma
    if case == "ii":
        return 0.0, np.zeros(p.n), p.gamma
    if case == "iii":
        return 0.0, -p.mu * p.gamma, p.gamma
    raise CaseMismatch(f"unknown case {case!r}")


def build_V_case(case, params):
    if case in ("i", "ii") and params.mu != 0:
        raise CaseMismatch(f"case {case} requires mu = 0, got {params.mu}")
    if case == "iii" and params.mu == 0:
        raise CaseMismatch("case iii requires mu != 0")
    lam, d, eta = _case_field_data(case, params)
    V = mobius_field(lam, d, params.Q, eta)
    V.name = f"V[{case}]"
    return V


def expected_factor(case, params):
    return params.tau if case == "i" else 0.0


# --- constraints -------------------------------------------------------------------


@dataclass
class ConstraintReport:
    case: str
    residuals: dict
    labels: dict
    R: np.ndarray
    tol: float = CONSTRAINT_TOL
    passed_each: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed_each = {k: bool(v <= self.tol) for k, v in self.residuals.items()}

    @property
    def passed(self):
        return all(self.passed_each.values()) and all(self.labels.values())

    @property
    def max_residual(self):
        return max(self.residuals.values()) if self.residuals else 0.0


def _nrm(a):
    return float(np.abs(np.asarray(a)).max()) if np.size(a) else 0.0


def r_matrix(case, p, corollary=None):
    """The case's R with ``R[i, j] = r^i_j``, exactly skew."""
    g, d, e = p.gamma, p.d, p.e
    if corollary == "4.2" and case == "iii":
        R = 2.0 * p.mu * (np.outer(e, g) - np.outer(g, e))
    elif case == "ii":
        R = np.outer(g, d) - np.outer(d, g)
    elif case == "iii":
        R = p.mu * (np.outer(e, g) - np.outer(g, e)) + np.outer(g, d) - np.outer(d, g)
    else:
        return np.zeros((p.n, p.n))
    # fl(a - b) = -fl(b - a), so this is skew bit for bit
    return 0.5 * (R - R.T)


def _labels(case, p):
    if case == "i":
        return {"mu == 0": p.mu == 0, "lam == 0": p.lam == 0, "d == 0": not p.d.any()}
    if case == "ii":
        return {"mu == 0": p.mu == 0, "lam != 0": p.lam != 0}
    if case == "iii":
        return {"mu != 0": p.mu != 0}
    raise CaseMismatch(f"unknown case {case!r}")


def check_constraints(case, params, tol=CONSTRAINT_TOL):
    p = params
    P, Q, g, d, e = p.P, p.Q, p.gamma, p.d, p.e
    comm = P @ Q - Q @ P
    R = r_matrix(case, p)
    if case == "i":
        res = {"Qe = P gamma": _nrm(Q @ e - P @ g), "PQ - QP = 2 tau P": _nrm(comm - 2 * p.tau * P)}
    elif case == "ii":
        res = {
            "<d, gamma> = 0": abs(float(d @ g)),
            "Qd = 0": _nrm(Q @ d),
            "Qe = -2 lam gamma + P gamma": _nrm(Q @ e + 2 * p.lam * g - P @ g),
            "PQ - QP = 2R": _nrm(comm - 2 * R),
        }
    elif case == "iii":
        res = {
            "<d + mu e, gamma> = 0": abs(float((d + p.mu * e) @ g)),
            "Qd = -mu (2 lam gamma + P gamma)": _nrm(Q @ d + p.mu * (2 * p.lam * g + P @ g)),
            "Qe = -2 lam gamma + P gamma": _nrm(Q @ e + 2 * p.lam * g - P @ g),
            "PQ - QP = 2R": _nrm(comm - 2 * R),
        }
    else:
        raise CaseMismatch(f"unknown case {case!r}")
    return ConstraintReport(case, res, _labels(case, p), R, tol)


def specialize_corollary(which, case, params, tol=CONSTRAINT_TOL):
    """Constraint report under the closed (4.1) or homothetic (4.2) 1-form assumption."""
    p = params
    P, Q, g, d, e = p.P, p.Q, p.gamma, p.d, p.e
    if which == "4.1":
        if P.any() or not np.allclose(d, p.mu * e, rtol=0, atol=tol):
            raise PreconditionViolation("closed 1-form requires P = 0 and d = mu e")
        if case == "i":
            res = {"Qe = 0": _nrm(Q @ e)}
        elif case == "ii":
            res = {"Qe = -2 lam gamma": _nrm(Q @ e + 2 * p.lam * g)}
        elif case == "iii":
            res = {"<gamma, e> = 0": abs(float(g @ e)), "Qe = -2 lam gamma": _nrm(Q @ e + 2 * p.lam * g)}
        else:
            raise CaseMismatch(f"unknown case {case!r}")
        R = np.zeros((p.n, p.n))
    elif which == "4.2":
        flat = p.mu == 0 and not d.any()
        curved = p.lam == 0 and np.allclose(d, -p.mu * e, rtol=0, atol=tol)
        if not (flat or curved):
            raise PreconditionViolation("homothetic 1-form requires (d = 0, mu = 0) or (d = -mu e, lam = 0)")
        comm = P @ Q - Q @ P
        if case == "i":
            return check_constraints("i", p, tol)
        if case == "ii":
            R = np.zeros((p.n, p.n))
            res = {"Qe = -2 lam gamma + P gamma": _nrm(Q @ e + 2 * p.lam * g - P @ g),
                   "PQ - QP = 0": _nrm(comm)}
        elif case == "iii":
            R = r_matrix("iii", p, corollary="4.2")
            res = {"Qe = P gamma": _nrm(Q @ e - P @ g), "PQ - QP = 2R": _nrm(comm - 2 * R)}
        else:
            raise CaseMismatch(f"unknown case {case!r}")
    else:
        raise ValueError(f"unknown corollary {which!r}")
    return ConstraintReport(f"cor{which}-{case}", res, _labels(case, p), R, tol)


# --- end-to-end --------------------------------------------------------------------


@dataclass
class Theorem12Result:
    case: str
    params: Theorem12Params
    constraints: ConstraintReport
    report: object
    max_residual: float
    expected_c: float
    factor_error: float
    max_b2: float
    regular: bool

    @property
    def passed(self):
        return (self.constraints.passed and self.report.is_homothetic
                and self.max_residual <= self.report.tol)


def default_samples(params, count=200, seed=0, radius=0.5):
    chart = ConstCurvChart(params.mu, params.n)
    return num.ball_samples(params.n, count, chart.sample_radius(radius), seed)


def verify_theorem12(case, params, phi=None, samples=None, strict=True, tol=1e-6,
                     factor_tol=1e-7, seed=0, fundamental_samples=20):
    """Build (h, rho, V) for the case and check the deformed conformality system.

    With the identity deformation the deformed system coincides with the
    undeformed one, so the residual is evaluated once on ``(h, rho)`` with
    the case's closed-form factor, then ``classify`` re-extracts ``c``.
    """
    phi = phi_family("randers") if phi is None else phi
    check_non_riemannian(phi)
    cons = check_constraints(case, params)
    if strict and not cons.passed:
        failed = [k for k, ok in {**cons.passed_each, **cons.labels}.items() if not ok]
        raise ConstraintViolation(f"case {case}: constraints fail: {failed}")
    if samples is None:
        samples = default_samples(params, seed=seed)
    chart = ConstCurvChart(params.mu, params.n)
    pair = deform_forward(chart, rho_field(params), IDENTITY)
    V = build_V_case(case, params)
    c0 = expected_factor(case, params)
    worst = 0.0
    for x in samples:
        R1, R2 = residual_deformed(pair.h, pair.rho, V, c0, x)
        worst = max(worst, float(np.abs(R1).max()), float(np.abs(R2).max()))
    rep = classify(pair.h, pair.rho, phi, V, samples, tol=tol, factor_tol=factor_tol, seed=seed,
                   fundamental_samples=fundamental_samples)
    b2 = max(norm_sq(chart, pair.rho, x) for x in samples)
    reg = regularity_check(AlphaBetaMetric(chart, pair.rho, phi), samples[:20], sample_s=7).passed
    return Theorem12Result(case, params, cons, rep, worst, c0,
                           float(np.abs(rep.factor - c0).max()), b2, reg)


# --- seeded instance generators (n = 3) --------------------------------------------


def hat(v):
    """Skew matrix with ``hat(v) @ x == cross(v, x)``."""
    a, b, c = v
    return np.array([[0.0, -c, b], [c, 0.0, -a], [-b, a, 0.0]])


def _perp(rng, q):
    g = rng.standard_normal(3)
    return g - (g @ q) / (q @ q) * q


def random_params(case, rng, variant=None):
    """A random constraint-satisfying parameter set in dimension 3.

    Several sub-families per case are cycled through ``variant`` (or drawn).
    """
    r = rng.standard_normal
    u = lambda: rng.uniform(-1, 1)
    if case == "i":
        variant = rng.integers(2) if variant is None else variant % 2
        if variant == 0:
            q = r(3)
            return Theorem12Params(3, tau=u(), Q=hat(q), e=u() * q, gamma=r(3))
        p, k = r(3), u()
        e = r(3)
        return Theorem12Params(3, P=hat(p), Q=k * hat(p), e=e, gamma=k * e + u() * p)
    if case == "ii":
        q = r(3)
        g = _perp(rng, q)
        a, k, m = u(), u(), u()
        lam = rng.choice([-1, 1]) * rng.uniform(0.2, 1.0)
        e = k * g + 2 * lam / (q @ q) * np.cross(q, g) + m * q
        return Theorem12Params(3, lam=lam, d=a * q, e=e, gamma=g, P=hat(-2 * a * g + k * q), Q=hat(q))
    if case == "iii":
        variant = rng.integers(4) if variant is None else variant % 4
        mu = rng.choice([-1, 1]) * rng.uniform(0.1, 1.0)
        if variant == 0:
            q = r(3)
            return Theorem12Params(3, mu=mu, lam=u(), d=u() * q, e=u() * q, P=u() * hat(q), Q=hat(q))
        if variant == 1:
            g, e = r(3), r(3)
            d = mu * e - 2 * mu * (e @ g) / (g @ g) * g
            return Theorem12Params(3, mu=mu, d=d, e=e, gamma=g, P=u() * hat(g))
        if variant == 2:
            g = r(3)
            e = u() * g
            return Theorem12Params(3, mu=mu, d=-mu * e, e=e, gamma=g, P=u() * hat(g), Q=u() * hat(g))
        q = r(3)
        g = _perp(rng, q)
        lam, b = u(), u()
        w = 2 * lam / (q @ q) * np.cross(q, g)
        return Theorem12Params(3, mu=mu, lam=lam, d=mu * w + mu * b * q, e=w + b * q, gamma=g, Q=hat(q))
    raise CaseMismatch(f"unknown case {case!r}")


def negative_control(case, params, rng):
    """Break exactly one constraint of an otherwise valid parameter set."""
    if case == "i":
        tau = params.tau if params.tau != 0 else 0.5
        return replace(params, tau=tau, P=hat(rng.standard_normal(3)) * 0.5, Q=np.zeros((3, 3)),
                       e=np.zeros(3), gamma=np.zeros(3))
    return replace(params, e=params.e + 0.5 * rng.standard_normal(3))


def fit_rho(params, samples, target=0.4):
    """Rescale the 1-form data so that ``max ||rho||_h <= target`` on ``samples``."""
    chart = ConstCurvChart(params.mu, params.n)
    rho = rho_field(params)
    m = max(np.sqrt(norm_sq(chart, rho, x)) for x in samples)
    return params if m <= target else params.scale_rho(target / m)
