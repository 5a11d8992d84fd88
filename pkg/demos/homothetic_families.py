"""
Closed-form conformal fields on constant-curvature Randers spaces
=================================================================

Draw constraint-satisfying parameter sets for each curvature case, build the
1-form and the vector field, and confirm the field is homothetic or Killing.
"""
import numpy as np

from finsler_cvf.families import check_constraints, default_samples, fit_rho, negative_control, random_params, verify_theorem12

rng = np.random.default_rng(0)

# %% one instance per case: mu = 0, lam = 0 (case i), mu = 0, lam != 0 (case ii), mu != 0 (case iii)
for case in ("i", "ii", "iii"):
    p = random_params(case, rng, variant=0)
    samples = default_samples(p, count=50, seed=1)
    p = fit_rho(p, samples)  # keep ||rho|| < 1 so the Randers metric is regular
    res = verify_theorem12(case, p, samples=samples)
    print(f"case {case:>3}: residual {res.max_residual:.1e}  c = {res.report.factor.mean():+.4f}"
          f"  ({res.report.classification})")

# %% breaking one linear constraint destroys conformality
p = random_params("ii", rng)
bad = negative_control("ii", p, rng)
samples = default_samples(bad, count=50, seed=2)
bad = fit_rho(bad, samples)
print("constraints hold:", check_constraints("ii", bad).passed)
res = verify_theorem12("ii", bad, samples=samples, strict=False)
print(f"residual of the broken instance: {res.max_residual:.2e}")
