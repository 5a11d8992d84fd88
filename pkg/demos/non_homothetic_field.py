"""
A conformal field that is not homothetic
========================================

On a projectively flat Randers space of negative curvature the conformal
factor of a field can vary from point to point.  Here the closed-form family
with f = 1/c is checked against the conformality system, and perturbing the
translation part of the field breaks it.
"""
import numpy as np

from finsler_cvf.cvf import classify, lemma71_check
from finsler_cvf.projflat import analytic_f, eval_A1_A2, simple_family

mu, tau, eta = -0.25, 1.0, np.array([1.0, 0.0])
inst = simple_family(mu, tau, eta)
print(f"regular region: |x| <= {inst.radius:.2f}, max ||beta||^2 = {inst.max_b2:.3f}")

# %% the extracted factor varies across the region
pts = inst.samples(100)
rep = classify(inst.chart, inst.beta, None, inst.V, pts)
print(f"classification: {rep.classification}")
print(f"c ranges over [{rep.factor.min():.3f}, {rep.factor.max():.3f}], std {rep.factor_std:.3f}")

# %% grad c is parallel to beta, as it must be for a closed beta
print(f"max |c_i b_j - c_j b_i| = {lemma71_check(inst.chart, inst.beta, inst.c, pts, c_grad=inst.c_grad):.1e}")

# %% the residual vectors vanish for the compatible data and not for a 10% perturbation
A = max(max(np.linalg.norm(a) for a in eval_A1_A2(inst.params, inst.f, x)) for x in pts)
bad = inst.params.perturbed(1.1)
A_bad = max(max(np.linalg.norm(a) for a in eval_A1_A2(bad, analytic_f(bad), x)) for x in pts)
print(f"|A| compatible: {A:.1e}   perturbed: {A_bad:.2e}")
