"""Small numerical kernels shared by the geometry modules.

Finite differences, fixed-step RK4, Gauss-Legendre quadrature and the
seeded low-discrepancy sampler used for every report.
"""
import math

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.stats import qmc

# Default steps. First derivatives use Richardson-extrapolated central
# differences (error O(h^4)); the plain central scheme is kept for the
# convergence tests.
FD_STEP = 1e-3
FD_STEP_PLAIN = 1e-5
FD_STEP_SECOND = 1e-4


def jacobian(f, x, step=FD_STEP, richardson=True):
    """Derivative of an array-valued ``f`` at ``x``; output axis -1 is d/dx^k.

    The step is scaled by ``1 + |x|``.  With ``richardson`` the central
    differences at ``h`` and ``h/2`` are combined to cancel the h^2 term.
    """
    x = np.asarray(x, dtype=float)
    h = step * (1.0 + np.linalg.norm(x))
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = 1.0
        d1 = (np.asarray(f(x + h * e)) - np.asarray(f(x - h * e))) / (2 * h)
        if richardson:
            d2 = (np.asarray(f(x + 0.5 * h * e)) - np.asarray(f(x - 0.5 * h * e))) / h
            cols.append((4.0 * d2 - d1) / 3.0)
        else:
            cols.append(d1)
    return np.stack(cols, axis=-1)


def second_derivative(f, x, step=FD_STEP_SECOND):
    """Plain central second differences; output axes (-2, -1) are (d_k, d_l)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = step * (1.0 + np.linalg.norm(x))
    f0 = np.asarray(f(x))
    out = np.zeros(f0.shape + (n, n))
    eye = np.eye(n) * h
    for k in range(n):
        fp = np.asarray(f(x + eye[k]))
        fm = np.asarray(f(x - eye[k]))
        out[..., k, k] = (fp - 2 * f0 + fm) / h**2
        for l in range(k + 1, n):
            fpp = np.asarray(f(x + eye[k] + eye[l]))
            fpm = np.asarray(f(x + eye[k] - eye[l]))
            fmp = np.asarray(f(x - eye[k] + eye[l]))
            fmm = np.asarray(f(x - eye[k] - eye[l]))
            val = (fpp - fpm - fmp + fmm) / (4 * h**2)
            out[..., k, l] = val
            out[..., l, k] = val
    return out


def derivative_1d(f, t, step=FD_STEP):
    h = step * (1.0 + abs(t))
    d1 = (f(t + h) - f(t - h)) / (2 * h)
    d2 = (f(t + 0.5 * h) - f(t - 0.5 * h)) / h
    return (4.0 * d2 - d1) / 3.0


def rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_path(rhs, y0, t0, t1, max_step=1e-3):
    """Integrate ``y' = rhs(t, y)`` from t0 to t1; return (ts, ys) on the grid."""
    span = t1 - t0
    n = max(1, math.ceil(abs(span) / max_step))
    ts = np.linspace(t0, t1, n + 1)
    h = span / n
    y = np.asarray(y0, dtype=float)
    ys = [y]
    for i in range(n):
        y = rk4_step(rhs, ts[i], y, h)
        ys.append(y)
    return ts, np.array(ys)


class HermiteTable:
    """Tabulated solution of a scalar 2nd-order ODE on [lo, hi].

    Built from RK4 runs outward from an interior anchor point; values and
    first derivatives feed a cubic Hermite interpolant, second derivatives
    come back from the ODE itself.
    """

    def __init__(self, second, anchor, y0, dy0, lo, hi, max_step=1e-3):
        self.second = second
        self.lo, self.hi = lo, hi

        def rhs(s, z):
            return np.array([z[1], second(s, z[0], z[1])])

        z0 = np.array([y0, dy0], dtype=float)
        pieces = []
        if lo < anchor:
            ts, zs = rk4_path(rhs, z0, anchor, lo, max_step)
            pieces.append((ts[::-1], zs[::-1]))
        if hi > anchor:
            ts, zs = rk4_path(rhs, z0, anchor, hi, max_step)
            if pieces:
                ts, zs = ts[1:], zs[1:]
            pieces.append((ts, zs))
        self.nodes = np.concatenate([p[0] for p in pieces])
        vals = np.concatenate([p[1] for p in pieces])
        self._spline = CubicHermiteSpline(self.nodes, vals[:, 0], vals[:, 1])
        self._dspline = CubicHermiteSpline(
            self.nodes, vals[:, 1], [second(s, y, dy) for s, (y, dy) in zip(self.nodes, vals)]
        )

    def __call__(self, s):
        return _scalar_or_array(self._spline(s))

    def d1(self, s):
        return _scalar_or_array(self._dspline(s))

    def d2(self, s):
        return float(self.second(s, self(s), self.d1(s)))


def _scalar_or_array(v):
    return float(v) if np.ndim(v) == 0 else np.asarray(v)


def gauss_legendre(f, a, b, nodes=48):
    """Integral of a scalar function over [a, b]; ``f`` must accept arrays."""
    if a == b:
        return 0.0
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return float(half * np.sum(wg * f(mid + half * xg)))


def ball_samples(n, count, radius=0.5, seed=0, inner=0.0, center=None):
    """Deterministic scrambled-Halton points in the shell inner <= |x| <= radius."""
    sampler = qmc.Halton(d=n, scramble=True, seed=seed)
    out = []
    while len(out) < count:
        pts = (2.0 * sampler.random(max(64, 4 * count)) - 1.0) * radius
        r = np.linalg.norm(pts, axis=1)
        keep = pts[(r <= radius) & (r >= inner)]
        out.extend(keep[: count - len(out)])
    pts = np.array(out)
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts


def unit_vectors(n, count, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
