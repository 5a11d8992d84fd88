"""Flows of vector fields with their tangent maps and accumulated conformal exponent."""
from dataclasses import dataclass

import numpy as np

from .alphabeta import eval_F
from .errors import DomainEscape

BASE_STEP = 1e-3
MIN_STEPS = 100
CONVERGENCE_TOL = 1e-10
MAX_HALVINGS = 8


@dataclass
class FlowResult:
    x0: np.ndarray
    t: float
    endpoint: np.ndarray
    jacobian: np.ndarray
    sigma: float
    steps: int
    change: float

    def push(self, y):
        return self.jacobian @ np.asarray(y, dtype=float)


def _rk4(V, c, x0, t, N, domain):
    n = x0.size
    h = t / N
    state = np.concatenate([x0, np.eye(n).ravel(), [0.0]])

    def rhs(s):
        x = s[:n]
        if domain is not None and not domain(x):
            raise DomainEscape(f"trajectory left the domain at {x}")
        J = s[n:n + n * n].reshape(n, n)
        ds = np.empty_like(s)
        ds[:n] = V(x)
        ds[n:n + n * n] = (V.jac(x) @ J).ravel()
        ds[-1] = 0.0 if c is None else c(x)
        return ds

    for _ in range(N):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise DomainEscape("trajectory blew up")
    if domain is not None and not domain(state[:n]):
        raise DomainEscape(f"trajectory left the domain at {state[:n]}")
    return state


def integrate_flow(V, x0, t, step=None, c=None, domain=None):
    """Integrate ``x' = V(x)``, ``J' = dV(x) J`` and ``sigma' = c(x)`` up to time ``t``.

    The step count starts at ``max(100, ceil(t / step))`` and is doubled until
    the endpoint moves by at most 1e-10.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if t == 0:
        return FlowResult(x0.copy(), 0.0, x0.copy(), np.eye(n), 0.0, 0, 0.0)
    N = max(MIN_STEPS, int(np.ceil(abs(t) / (step or BASE_STEP))))
    prev = _rk4(V, c, x0, t, N, domain)
    change = np.inf
    for _ in range(MAX_HALVINGS):
        N *= 2
        cur = _rk4(V, c, x0, t, N, domain)
        change = float(np.abs(cur[:n] - prev[:n]).max())
        prev = cur
        if change <= CONVERGENCE_TOL:
            break
    return FlowResult(x0, float(t), prev[:n], prev[n:n + n * n].reshape(n, n), float(prev[-1]), N, change)


@dataclass
class ScalingReport:
    err_sigma: float
    err_c: float
    errors_sigma: np.ndarray
    errors_c: np.ndarray


def check_scaling(F, V, c, samples, t_values, domain=None):
    """Compare ``F(phi_t x, J_t y)`` with ``exp(-2 sigma_t) F`` and with ``exp(-2 c(x) t) F``.

    ``samples`` is a sequence of ``(x, y)`` pairs; errors are relative to ``F(x, y)``.
    """
    cfun = c if callable(c) else (lambda x, _c=float(c): _c)
    es, ec = [], []
    for x, y in samples:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        F0 = eval_F(F, x, y)
        for t in t_values:
            res = integrate_flow(V, x, t, c=cfun, domain=domain)
            Ft = eval_F(F, res.endpoint, res.push(y))
            es.append(abs(Ft - np.exp(-2 * res.sigma) * F0) / F0)
            ec.append(abs(Ft - np.exp(-2 * cfun(x) * t) * F0) / F0)
    es, ec = np.array(es), np.array(ec)
    return ScalingReport(float(es.max()), float(ec.max()), es, ec)
