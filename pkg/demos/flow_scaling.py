"""
How a conformal flow rescales the metric
========================================

Integrate the flow of a conformal field together with its Jacobian and the
accumulated factor sigma_t = int_0^t c(phi_s x) ds.  For a homothetic field
the scaling is exp(-2 c t); for a genuinely conformal one only the
accumulated form exp(-2 sigma_t) is right.
"""
import numpy as np

from finsler_cvf import _numerics as num
from finsler_cvf.alphabeta import AlphaBetaMetric, phi_family
from finsler_cvf.flow import check_scaling
from finsler_cvf.geom import constant_form, euclidean, linear_field
from finsler_cvf.projflat import Example72Params, build_example72

randers = phi_family("randers")

# %% Minkowski-Randers space with the dilation field: both forms agree
F = AlphaBetaMetric(euclidean(2), constant_form([0.3, -0.2]), randers)
samples = list(zip(num.ball_samples(2, 10, 0.5, seed=0), num.unit_vectors(2, 10, seed=1)))
rep = check_scaling(F, linear_field(-1.2 * np.eye(2)), 0.6, samples, [0.1, 0.3, 0.5])
print(f"dilation: sigma-form {rep.err_sigma:.1e}, constant-exponent {rep.err_c:.1e}")

# %% non-homothetic field on the projectively flat example
inst = build_example72(Example72Params(-0.25, 1.0, [1.0, 0.0]))
F = AlphaBetaMetric(inst.chart, inst.beta, randers)
samples = list(zip(num.ball_samples(2, 8, 0.3, seed=3), num.unit_vectors(2, 8, seed=4)))
inside = lambda x: np.linalg.norm(x) <= inst.radius
for t in (0.1, 0.2, 0.3):
    rep = check_scaling(F, inst.V, inst.c, samples, [t], domain=inside)
    print(f"t = {t}: sigma-form {rep.err_sigma:.1e}, constant-exponent {rep.err_c:.2e}")
