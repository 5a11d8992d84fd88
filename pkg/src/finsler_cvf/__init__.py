"""Conformal vector fields on (alpha, beta)-spaces: constructions and numerical verification."""
from .alphabeta import AlphaBetaMetric, PhiFunction, eval_F, phi_family, regularity_check
from .cvf import classify, extract_factor, lemma71_check, lie_bracket, residual_fundamental, residual_pde
from .deform import (
    DeformationTriple,
    deform_forward,
    deform_inverse,
    form_check,
    inverse_fields,
    isotropic_relation,
    navigation_triple,
    recipe,
)
from .families import (
    Theorem12Params,
    build_V_case,
    check_constraints,
    conformal_field_riemann,
    specialize_corollary,
    verify_theorem12,
)
from .flow import check_scaling, integrate_flow
from .geom import (
    ConstCurvChart,
    MetricField,
    OneFormField,
    VectorField,
    christoffel,
    covdiff_oneform,
    covdiff_vector,
    r_s_decompose,
    sectional_curvature,
)
from .projflat import (
    Example72Params,
    build_example72,
    check_compatibility,
    eval_A1_A2,
    simple_family,
    solve_f_ode,
)

__version__ = "0.1.0"
