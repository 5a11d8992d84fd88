"""Conformal vector fields: residuals, conformal factor, Lie bracket, classification."""
from dataclasses import dataclass, field

import numpy as np

from . import _numerics as num
from .alphabeta import AlphaBetaMetric, eval_F
from .errors import NotClosed
from .geom import (
    VectorField,
    as_point,
    covdiff_oneform,
    covdiff_vector,
    inverse,
    r_s_decompose,
)

RESIDUAL_TOL = 1e-6
FACTOR_TOL = 1e-7
NEGATIVE_CONTROL = 1e-3


def _scalar(c, x):
    return float(c(x)) if callable(c) else float(c)


def xv_apply(V, G, x, y):
    """Lifted field ``X_V G = V^i dG/dx^i + y^i (d_i V^j) dG/dy^j`` by finite differences."""
    x = as_point(x)
    y = np.asarray(y, dtype=float)
    gx = num.jacobian(lambda xx: G(xx, y), x)
    gy = num.jacobian(lambda yy: G(x, yy), y)
    return float(V(x) @ gx + (V.jac(x) @ y) @ gy)


def residual_fundamental(F, V, c, x, y, normalized=True):
    """``X_V(F^2) + 4 c F^2``, divided by ``F^2`` unless ``normalized`` is False."""
    F2 = eval_F(F, x, y) ** 2
    res = xv_apply(V, lambda xx, yy: eval_F(F, xx, yy) ** 2, x, y) + 4.0 * _scalar(c, x) * F2
    return res / F2 if normalized else res


def residual_pde(metric, beta, V, c, x):
    """Return ``(R1, R2)`` of the two-equation conformality system.

    R1_ij = V_{i;j} + V_{j;i} + 4 c a_ij
    R2_i  = V^j b_{i;j} + b^j V_{j;i} + 2 c b_i
    """
    x = as_point(x)
    cx = _scalar(c, x)
    dV = covdiff_vector(metric, V, x)
    R1 = dV + dV.T + 4.0 * cx * metric.coeffs(x)
    b = beta.coeffs(x)
    bup = inverse(metric, x) @ b
    R2 = covdiff_oneform(metric, beta, x) @ V(x) + bup @ dV + 2.0 * cx * b
    return R1, R2


def residual_deformed(h, rho, V, c, x):
    """Same system written for the deformed pair ``(h, rho)``."""
    return residual_pde(h, rho, V, c, x)


def extract_factor(metric, V, x):
    """``c`` killing the trace of R1: ``-a^ij (V_i;j + V_j;i) / (4n)``."""
    x = as_point(x)
    dV = covdiff_vector(metric, V, x)
    return float(-np.sum(inverse(metric, x) * (dV + dV.T)) / (4.0 * x.size))


def lie_bracket(V, W, x):
    x = np.asarray(x, dtype=float)
    return W.jac(x) @ V(x) - V.jac(x) @ W(x)


def bracket_field(V, W):
    return VectorField(lambda x: lie_bracket(V, W, x), name=f"[{V.name},{W.name}]")


def conformal_tracefree(metric, V, x):
    """Norm of the trace-free part of ``V_{i;j} + V_{j;i}``."""
    x = as_point(x)
    dV = covdiff_vector(metric, V, x)
    S = dV + dV.T
    c = -np.sum(inverse(metric, x) * S) / (4.0 * x.size)
    return float(np.linalg.norm(S + 4.0 * c * metric.coeffs(x)))


@dataclass
class ConformalReport:
    classification: str
    R1: np.ndarray
    R2: np.ndarray
    fundamental: np.ndarray
    factor: np.ndarray
    tol: float
    factor_tol: float
    scale: np.ndarray = field(repr=False, default=None)

    @property
    def max_residual(self):
        return float(max(self.R1.max(), self.R2.max()))

    @property
    def max_fundamental(self):
        return float(self.fundamental.max()) if self.fundamental.size else 0.0

    @property
    def factor_std(self):
        return float(np.std(self.factor))

    @property
    def is_conformal(self):
        return self.classification != "none"

    @property
    def is_homothetic(self):
        return self.classification in ("homothetic", "killing")

    @property
    def is_killing(self):
        return self.classification == "killing"


def classify(metric, beta, phi, V, samples, tol=RESIDUAL_TOL, factor_tol=FACTOR_TOL,
             directions=3, seed=0, c=None, fundamental_samples=None):
    """Extract ``c`` at each sample, evaluate every residual and classify ``V``.

    Residuals are measured against ``1 + |V| + |dV|`` at the sample.  When
    ``phi`` is given the fundamental residual of ``F = alpha phi(beta/alpha)``
    is also recorded along ``directions`` seeded unit vectors per sample, on
    the first ``fundamental_samples`` samples (all by default).
    ``c`` overrides extraction (used to test a candidate closed form).
    """
    R1s, R2s, fund, cs, scales = [], [], [], [], []
    F = AlphaBetaMetric(metric, beta, phi) if phi is not None else None
    for k, x in enumerate(samples):
        x = as_point(x)
        ck = extract_factor(metric, V, x) if c is None else _scalar(c, x)
        R1, R2 = residual_pde(metric, beta, V, ck, x)
        scale = 1.0 + np.linalg.norm(V(x)) + np.linalg.norm(V.jac(x))
        R1s.append(np.abs(R1).max() / scale)
        R2s.append(np.abs(R2).max() / scale)
        cs.append(ck)
        scales.append(scale)
        if F is not None and (fundamental_samples is None or k < fundamental_samples):
            for y in num.unit_vectors(x.size, directions, seed=seed + k):
                fund.append(abs(residual_fundamental(F, V, ck, x, y)) / scale)
    R1s, R2s, cs = np.array(R1s), np.array(R2s), np.array(cs)
    conformal = R1s.max() <= tol and R2s.max() <= tol
    if not conformal:
        cls = "none"
    elif np.std(cs) > factor_tol * (1.0 + np.mean(np.abs(cs))):
        cls = "conformal"
    elif np.abs(cs).max() > factor_tol:
        cls = "homothetic"
    else:
        cls = "killing"
    return ConformalReport(cls, R1s, R2s, np.array(fund), cs, tol, factor_tol, np.array(scales))


def lemma71_check(metric, beta, c, samples, c_grad=None, closed_tol=1e-8):
    """Max over samples of ``|c_i b_j - c_j b_i|``; requires ``beta`` closed."""
    worst = 0.0
    for x in samples:
        x = as_point(x)
        _, s, _ = r_s_decompose(metric, beta, x)
        if np.abs(s).max() > closed_tol:
            raise NotClosed(f"|s_ij| = {np.abs(s).max():.3e} at {x}")
        ci = np.asarray(c_grad(x)) if c_grad is not None else num.jacobian(c, x)
        b = beta.coeffs(x)
        worst = max(worst, float(np.abs(np.outer(ci, b) - np.outer(b, ci)).max()))
    return worst
