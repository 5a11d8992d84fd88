"""Riemannian backbone: metric, 1-form and vector fields on a single chart.

Index conventions used throughout the package:

* ``metric.grad(x)[i, j, k]``  = d_k a_ij
* ``metric.hess(x)[i, j, k, l]`` = d_l d_k a_ij
* ``form.jac(x)[i, j]``        = d_j b_i
* ``field.jac(x)[i, j]``       = d_j V^i
* ``christoffel(...)[i, j, k]`` = Gamma^i_jk
* covariant derivatives ``[i, j]`` = b_{i|j}, i.e. derivative index last.
"""
import numpy as np
from scipy.linalg import solve_triangular

from . import _numerics as num
from .errors import DegeneratePlane, DomainViolation, SingularMetric

PIVOT_RTOL = 1e-12


def as_point(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainViolation(f"point must be a vector with n >= 2 entries, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainViolation("point has non-finite coordinates")
    return x


class MetricField:
    """Symmetric positive-definite coefficient field ``x -> a_ij(x)``.

    ``grad`` and ``hess`` are optional analytic derivatives; when missing
    they are obtained by finite differences (second derivatives from the
    analytic gradient when only that one is supplied).
    """

    def __init__(self, coeffs, grad=None, hess=None, domain=None, name="metric"):
        self._coeffs = coeffs
        self._grad = grad
        self._hess = hess
        self._domain = domain
        self.name = name

    def contains(self, x):
        return True if self._domain is None else bool(self._domain(np.asarray(x, dtype=float)))

    def _check(self, x):
        x = as_point(x)
        if not self.contains(x):
            raise DomainViolation(f"{self.name}: point {x} outside the domain")
        return x

    def coeffs(self, x):
        x = self._check(x)
        a = np.asarray(self._coeffs(x), dtype=float)
        return 0.5 * (a + a.T)

    def grad(self, x):
        x = self._check(x)
        if self._grad is not None:
            g = np.asarray(self._grad(x), dtype=float)
        else:
            g = num.jacobian(self.coeffs, x)
        return 0.5 * (g + g.transpose(1, 0, 2))

    def hess(self, x):
        x = self._check(x)
        if self._hess is not None:
            return np.asarray(self._hess(x), dtype=float)
        if self._grad is not None:
            hh = num.jacobian(self.grad, x)
        else:
            hh = num.second_derivative(self.coeffs, x)
        return 0.5 * (hh + hh.transpose(0, 1, 3, 2))

    @property
    def has_analytic_grad(self):
        return self._grad is not None

    def dim(self, x):
        return self.coeffs(x).shape[0]


def constant_metric(a):
    a = np.array(a, dtype=float)
    n = a.shape[0]
    return MetricField(
        lambda x: a,
        grad=lambda x: np.zeros((n, n, n)),
        hess=lambda x: np.zeros((n, n, n, n)),
        name="constant",
    )


def euclidean(n):
    return constant_metric(np.eye(n))


class ConstCurvChart(MetricField):
    """Conformally flat chart ``(2 / (1 + mu |x|^2))^2 delta_ij`` of curvature ``mu``."""

    def __init__(self, mu, n):
        if n < 2:
            raise DomainViolation("dimension must be at least 2")
        self.mu = float(mu)
        self.n = int(n)
        super().__init__(
            self._conf_coeffs,
            grad=self._conf_grad,
            hess=self._conf_hess,
            domain=lambda x: 1.0 + self.mu * (x @ x) > 0.0,
            name=f"ConstCurvChart(mu={self.mu:g}, n={self.n})",
        )

    def _denom(self, x):
        if x.size != self.n:
            raise DomainViolation(f"chart has dimension {self.n}, point has {x.size}")
        return 1.0 + self.mu * (x @ x)

    def conformal_factor(self, x):
        """Scalar ``phi`` with ``a_ij = phi delta_ij``."""
        return 4.0 / self._denom(as_point(x)) ** 2

    def _conf_coeffs(self, x):
        return 4.0 / self._denom(x) ** 2 * np.eye(self.n)

    def _conf_grad(self, x):
        D = self._denom(x)
        dphi = -16.0 * self.mu * x / D**3
        return np.einsum("ij,k->ijk", np.eye(self.n), dphi)

    def _conf_hess(self, x):
        D = self._denom(x)
        mu = self.mu
        ddphi = -16.0 * mu * np.eye(self.n) / D**3 + 96.0 * mu**2 * np.outer(x, x) / D**4
        return np.einsum("ij,kl->ijkl", np.eye(self.n), ddphi)

    def sample_radius(self, default=0.5):
        """Largest radius <= default with ``1 + mu r^2 > 1/2`` (kept strict)."""
        if self.mu >= 0:
            return default
        return min(default, 0.99 * np.sqrt(0.5 / -self.mu))


def metric_coeffs(chart, x):
    return chart.coeffs(x)


def inverse(metric, x):
    """Inverse of the coefficient matrix through a Cholesky factorisation."""
    a = metric.coeffs(x)
    return _spd_inverse(a)


def _spd_inverse(a):
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric("coefficient matrix is not positive definite") from exc
    piv = np.diag(L) ** 2
    if piv.min() < PIVOT_RTOL * piv.max():
        raise SingularMetric(f"pivot ratio {piv.min() / piv.max():.3e} below {PIVOT_RTOL}")
    Linv = solve_triangular(L, np.eye(a.shape[0]), lower=True)
    return Linv.T @ Linv


class OneFormField:
    def __init__(self, coeffs, jac=None, domain=None, name="beta"):
        self._coeffs = coeffs
        self._jac = jac
        self._domain = domain
        self.name = name

    def coeffs(self, x):
        x = as_point(x)
        if self._domain is not None and not self._domain(x):
            raise DomainViolation(f"{self.name}: point {x} outside the domain")
        return np.asarray(self._coeffs(x), dtype=float)

    def jac(self, x):
        x = as_point(x)
        if self._jac is not None:
            return np.asarray(self._jac(x), dtype=float)
        return num.jacobian(self.coeffs, x)

    def __add__(self, other):
        return OneFormField(
            lambda x: self.coeffs(x) + other.coeffs(x),
            jac=lambda x: self.jac(x) + other.jac(x),
        )

    def scaled(self, lam):
        return OneFormField(lambda x: lam * self.coeffs(x), jac=lambda x: lam * self.jac(x))


def constant_form(b):
    b = np.array(b, dtype=float)
    return OneFormField(lambda x: b, jac=lambda x: np.zeros((b.size, b.size)), name="constant")


def zero_form(n):
    return constant_form(np.zeros(n))


class VectorField:
    """Vector field ``x -> V^i(x)`` with optional analytic Jacobian ``d_j V^i``."""

    def __init__(self, comps, jac=None, name="V"):
        self._comps = comps
        self._jac = jac
        self.name = name

    def __call__(self, x):
        return np.asarray(self._comps(np.asarray(x, dtype=float)), dtype=float)

    def jac(self, x):
        x = np.asarray(x, dtype=float)
        if self._jac is not None:
            return np.asarray(self._jac(x), dtype=float)
        return num.jacobian(self, x)


def linear_field(M, offset=None):
    """``V(x) = M x + offset``."""
    M = np.array(M, dtype=float)
    off = np.zeros(M.shape[0]) if offset is None else np.array(offset, dtype=float)
    return VectorField(lambda x: M @ x + off, jac=lambda x: M, name="linear")


def christoffel(metric, x):
    x = as_point(x)
    ainv = inverse(metric, x)
    return _christoffel(ainv, metric.grad(x))


def _first_kind(g):
    # Gamma_ljk = 1/2 (d_j a_lk + d_k a_lj - d_l a_jk)
    return 0.5 * (g.transpose(0, 2, 1) + g - g.transpose(2, 0, 1))


def _christoffel(ainv, g):
    G = np.einsum("il,ljk->ijk", ainv, _first_kind(g))
    return 0.5 * (G + G.transpose(0, 2, 1))


def covdiff_oneform(metric, beta, x):
    """``b_{i|j} = d_j b_i - Gamma^k_ij b_k``."""
    x = as_point(x)
    G = christoffel(metric, x)
    return beta.jac(x) - np.einsum("kij,k->ij", G, beta.coeffs(x))


def covdiff_vector(metric, V, x):
    """Lowered covariant derivative ``V_{i;j} = a_ik (d_j V^k + Gamma^k_jl V^l)``."""
    x = as_point(x)
    a = metric.coeffs(x)
    G = christoffel(metric, x)
    up = V.jac(x) + np.einsum("kjl,l->kj", G, V(x))
    return a @ up


def r_s_decompose(metric, beta, x):
    """Symmetric part r_ij, antisymmetric part s_ij and s_j = b^i s_ij."""
    x = as_point(x)
    db = covdiff_oneform(metric, beta, x)
    r = 0.5 * (db + db.T)
    s = 0.5 * (db - db.T)
    bup = inverse(metric, x) @ beta.coeffs(x)
    return r, s, bup @ s


def norm_sq(metric, beta, x):
    b = beta.coeffs(x)
    return float(b @ inverse(metric, x) @ b)


def raise_index(metric, beta, x):
    return inverse(metric, x) @ beta.coeffs(x)


def christoffel_derivative(metric, x):
    """``dG[i, j, k, m] = d_m Gamma^i_jk`` from the metric's first and second derivatives."""
    x = as_point(x)
    ainv = inverse(metric, x)
    g = metric.grad(x)
    hh = metric.hess(x)
    first = _first_kind(g)
    dfirst = 0.5 * (hh.transpose(0, 2, 1, 3) + hh - hh.transpose(2, 0, 1, 3))
    dainv = -np.einsum("ip,pqm,ql->ilm", ainv, g, ainv)
    dG = np.einsum("ilm,ljk->ijkm", dainv, first) + np.einsum("il,ljkm->ijkm", ainv, dfirst)
    return 0.5 * (dG + dG.transpose(0, 2, 1, 3))


def riemann_tensor(metric, x):
    """Fully lowered ``R_ijkl`` with ``R(X, Y, X, Y) = K (|X|^2 |Y|^2 - <X, Y>^2)``."""
    x = as_point(x)
    G = christoffel(metric, x)
    dG = christoffel_derivative(metric, x)
    R = (
        np.einsum("iljk->ijkl", dG)
        - np.einsum("ikjl->ijkl", dG)
        + np.einsum("ikm,mlj->ijkl", G, G)
        - np.einsum("ilm,mkj->ijkl", G, G)
    )
    return np.einsum("ip,pjkl->ijkl", metric.coeffs(x), R)


def sectional_curvature(metric, x, X, Y):
    x = as_point(x)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    a = metric.coeffs(x)
    xx, yy, xy = X @ a @ X, Y @ a @ Y, X @ a @ Y
    area = xx * yy - xy**2
    if area <= 1e-12 * xx * yy or xx == 0 or yy == 0:
        raise DegeneratePlane("X and Y do not span a plane")
    R = riemann_tensor(metric, x)
    return float(np.einsum("ijkl,i,j,k,l->", R, X, Y, X, Y) / area)
