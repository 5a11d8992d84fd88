"""
Deforming (alpha, beta) into (h, rho) and back
==============================================

The navigation triple (u, v, w) = (1 - t, t - 1, t - 1) turns a Randers
pair into a Riemannian metric h and a 1-form rho.  Starting from the flat
metric and the conformal 1-form rho = x . dx, the inverse map recovers a pair
whose symmetrised derivative has the isotropic form
r_ij = 2 theta (a_ij - b_i b_j) - b_i s_j - b_j s_i.
"""
import numpy as np

from finsler_cvf import _numerics as num
from finsler_cvf.deform import deform_forward, deform_inverse, form_check, inverse_fields, isotropic_relation, navigation_triple
from finsler_cvf.geom import ConstCurvChart, OneFormField, euclidean, norm_sq

n = 3
triple = navigation_triple()

# %% pointwise round trip on a curved chart
chart = ConstCurvChart(0.4, n)
beta = OneFormField(lambda x: 0.2 * np.sin(x + np.arange(n)))
pair = deform_forward(chart, beta, triple)
x = np.array([0.1, -0.2, 0.3])
inv = deform_inverse(pair.h.coeffs(x), pair.rho.coeffs(x), triple)
print(f"round trip: |a - a0| = {np.abs(inv.a - chart.coeffs(x)).max():.1e}, "
      f"|b - b0| = {np.abs(inv.b - beta.coeffs(x)).max():.1e}, t = {inv.t:.4f}")

# %% flat h with the position 1-form: conformal with sigma = 1
h = euclidean(n)
rho = OneFormField(lambda x: x.copy(), jac=lambda x: np.eye(n))
print("sigma on samples:", np.unique(np.round(form_check(h, rho, num.ball_samples(n, 10, 0.7)).sigma, 12)))

# %% the recovered Randers data satisfies the isotropic relation
a, b = inverse_fields(h, rho, triple)
pts = num.ball_samples(n, 30, 0.7, seed=1, inner=0.1)
out = [isotropic_relation(a, b, x) for x in pts]
print(f"max relation residual {max(r for r, _ in out):.1e}; "
      f"theta in [{min(t for _, t in out):.3f}, {max(t for _, t in out):.3f}]; "
      f"max ||b||^2 = {max(norm_sq(a, b, x) for x in pts):.3f}")
