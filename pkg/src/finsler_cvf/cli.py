"""Scenario-driven command-line driver.

    finsler-cvf run <file|bundled-name> [--out PATH] [--seed N] [--samples N] [--tol X]
    finsler-cvf list-scenarios
    finsler-cvf report-format [VERSION]

Exit codes: 0 every check passed, 1 some check failed, 2 bad input.
"""
import argparse
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import _numerics as num
from .alphabeta import AlphaBetaMetric, douglas_ode_residual, phi_family
from .cvf import classify, extract_factor, lemma71_check
from .deform import form_check, deform_forward, inverse_fields, isotropic_relation, navigation_triple, recipe
from .errors import (
    CaseMismatch,
    ConfigError,
    FinslerCVFError,
    InvalidFamilyParams,
    PreconditionViolation,
)
from .families import Theorem12Params, check_constraints, fit_rho, specialize_corollary, verify_theorem12
from .flow import check_scaling
from .geom import OneFormField, constant_form, constant_metric, euclidean, linear_field
from .projflat import Example72Params, build_example72, check_compatibility, eval_A1_A2, simple_family

REPORT_VERSION = "1"
REPORT_FORMAT = f"finsler-cvf-report/{REPORT_VERSION}"
THREADS_ENV = "FINSLER_CVF_THREADS"

SCHEMA = {
    "1": {
        "format": REPORT_FORMAT,
        "fields": {
            "format": "string, always 'finsler-cvf-report/1'",
            "scenario": "object, the scenario as parsed (after command-line overrides)",
            "classification": "string or null: none | conformal | homothetic | killing",
            "checks": "array of check objects, in execution order",
            "passed": "bool, true iff every check passed",
        },
        "check": {
            "name": "string",
            "value": "number, the measured quantity (a residual maximum unless op is '>=')",
            "op": "'<=' (value must not exceed tol) or '>=' (value must reach tol)",
            "tol": "number",
            "passed": "bool",
            "location": "array of numbers or null: sample point where value was attained",
        },
        "notes": "wall time is printed in the human report only, so machine reports are byte-stable",
    }
}

KINDS = ("theorem12", "corollary41", "corollary42", "example72", "simple-family",
         "deform-recipe", "flow-check", "isoS-navigation", "douglas-check")


# --- scenario parsing ----------------------------------------------------------------


def _bundled_dir():
    return resources.files("finsler_cvf") / "scenarios"


def bundled_scenarios():
    out = {}
    for entry in sorted(_bundled_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            data = json.loads(entry.read_text(encoding="utf-8"))
            out[entry.name[:-5]] = data.get("description", "")
    return out


def resolve(path):
    """A real path wins; otherwise the stem is looked up among bundled scenarios."""
    p = Path(path)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    cand = _bundled_dir() / f"{stem}.json"
    if cand.is_file():
        return cand.read_text(encoding="utf-8")
    raise ConfigError(f"scenario file not found: {path}")


def load_scenario(text):
    try:
        sc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(sc, dict):
        raise ConfigError("scenario must be a JSON object")
    if sc.get("kind") not in KINDS:
        raise ConfigError(f"unknown kind {sc.get('kind')!r}; expected one of {', '.join(KINDS)}")
    sc.setdefault("params", {})
    sc.setdefault("sampling", {})
    sc.setdefault("tolerances", {})
    for key in ("params", "sampling", "tolerances"):
        if not isinstance(sc[key], dict):
            raise ConfigError(f"'{key}' must be an object")
    return sc


def _need(params, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ConfigError(f"missing parameters: {', '.join(missing)}")


def _matrix(params, key, n, antisymmetrize):
    M = params.get(key)
    if M is None:
        return np.zeros((n, n))
    M = np.array(M, dtype=float)
    if M.shape != (n, n):
        raise ConfigError(f"{key} must be {n}x{n}, got shape {M.shape}")
    if antisymmetrize:
        M = 0.5 * (M - M.T)
    elif not np.array_equal(M, -M.T):
        raise ConfigError(f"{key} is not exactly skew-symmetric (set \"antisymmetrize\": true to project)")
    return M


def _vector(params, key, n, default=None):
    v = params.get(key, default)
    if v is None:
        return np.zeros(n)
    v = np.array(v, dtype=float)
    if v.shape != (n,):
        raise ConfigError(f"{key} must have length {n}, got shape {v.shape}")
    return v


def _dim(sc):
    n = sc.get("n", sc["params"].get("n"))
    if not isinstance(n, int) or n < 2:
        raise ConfigError("dimension 'n' must be an integer >= 2")
    return n


# --- checks --------------------------------------------------------------------------


def _loc(x):
    return None if x is None else [float(v) for v in np.asarray(x).ravel()]


def check(name, value, tol, op="<=", location=None):
    value, tol = float(value), float(tol)
    ok = value <= tol if op == "<=" else value >= tol
    return {"name": name, "value": value, "op": op, "tol": tol, "passed": bool(ok), "location": _loc(location)}


def _samples(sc, n, default_count, default_radius):
    s = sc["sampling"]
    return num.ball_samples(n, int(s.get("count", default_count)), float(s.get("radius", default_radius)),
                            seed=int(s.get("seed", 0)), inner=float(s.get("inner", 0.0)))


def _tol(sc, key, default):
    return float(sc["tolerances"].get(key, default))


def _argmax_loc(values, samples):
    k = int(np.argmax(values))
    return float(values[k]), samples[k]


# --- runners -------------------------------------------------------------------------


def _theorem12_params(sc):
    p, n = sc["params"], _dim(sc)
    anti = bool(sc.get("antisymmetrize", False))
    return Theorem12Params(
        n, mu=float(p.get("mu", 0.0)), lam=float(p.get("lam", 0.0)), tau=float(p.get("tau", 0.0)),
        d=_vector(p, "d", n), e=_vector(p, "e", n), gamma=_vector(p, "gamma", n), eta=_vector(p, "eta", n),
        P=_matrix(p, "P", n, anti), Q=_matrix(p, "Q", n, anti),
    )


def _phi(sc):
    spec = sc["params"].get("phi", {"kind": "randers"})
    spec = dict(spec)
    return phi_family(spec.pop("kind"), **spec)


def _theorem12_checks(sc, params, case, cons):
    checks = [check(f"constraint: {k}", v, cons.tol) for k, v in cons.residuals.items()]
    checks += [check(f"label: {k}", 0.0 if ok else 1.0, 0.0) for k, ok in cons.labels.items()]
    tol = _tol(sc, "residual", 1e-6)
    samples = _samples(sc, params.n, 200, 0.5)
    params = fit_rho(params, samples) if sc["params"].get("fit_rho", False) else params
    res = verify_theorem12(case, params, phi=_phi(sc), samples=samples, strict=False, tol=tol,
                           factor_tol=_tol(sc, "factor", 1e-7), seed=int(sc["sampling"].get("seed", 0)))
    rep = res.report
    v, x = _argmax_loc(np.maximum(rep.R1, rep.R2), samples)
    checks.append(check("residual: conformality system", max(v, res.max_residual), tol, location=x))
    if rep.fundamental.size:
        checks.append(check("residual: X_V(F^2) + 4cF^2 (relative)", rep.max_fundamental, tol))
    checks.append(check(f"factor: |c - {res.expected_c:g}|", res.factor_error, _tol(sc, "factor", 1e-7)))
    checks.append(check("factor: stddev", rep.factor_std, _tol(sc, "factor", 1e-7)))
    checks.append(check("regularity", 0.0 if res.regular else 1.0, 0.0))
    return checks, rep.classification, {"mean_c": float(np.mean(rep.factor))}


def run_theorem12(sc):
    _need(sc["params"], "case")
    case = sc["params"]["case"]
    params = _theorem12_params(sc)
    return _theorem12_checks(sc, params, case, check_constraints(case, params))


def _run_corollary(which):
    def run(sc):
        _need(sc["params"], "case")
        case = sc["params"]["case"]
        params = _theorem12_params(sc)
        return _theorem12_checks(sc, params, case, specialize_corollary(which, case, params))
    return run


def _example72_params(sc):
    p, n = sc["params"], _dim(sc)
    _need(p, "mu", "tau", "eta")
    eta = _vector(p, "eta", n)
    if "eta_scale" in p:
        eta = float(p["eta_scale"]) * eta
    return Example72Params(float(p["mu"]), float(p["tau"]), eta, _vector(p, "gamma", n),
                           _matrix(p, "Q", n, bool(sc.get("antisymmetrize", False))),
                           p.get("c0"), p.get("f0"))


def _projflat_checks(sc, params, inst, exact_c=None):
    tol = _tol(sc, "residual", 1e-6)
    samples = _samples(sc, params.n, 100, min(0.5, inst.radius))
    rep = classify(inst.chart, inst.beta, None, inst.V, samples, tol=tol)
    checks = []
    v, x = _argmax_loc(np.maximum(rep.R1, rep.R2), samples)
    checks.append(check("residual: conformality system", v, tol, location=x))
    cerr = np.array([abs(rep.factor[k] - inst.c(s)) for k, s in enumerate(samples)])
    v, x = _argmax_loc(cerr, samples)
    checks.append(check("factor: extracted vs closed form", v, _tol(sc, "factor", 1e-7), location=x))
    checks.append(check("factor: stddev (non-homothetic)", rep.factor_std, _tol(sc, "factor_spread", 0.1), ">="))
    checks.append(check("closed 1-form: |c_i b_j - c_j b_i|",
                        lemma71_check(inst.chart, inst.beta, inst.c, samples, c_grad=inst.c_grad),
                        _tol(sc, "lemma", 1e-9)))
    A = np.array([max(np.linalg.norm(a) for a in eval_A1_A2(params, inst.f, s)) for s in samples])
    v, x = _argmax_loc(A, samples)
    checks.append(check("residual: max(|A1|, |A2|)", v, _tol(sc, "A", 1e-8), location=x))
    checks.append(check("regular ball radius", inst.radius, 0.05, ">="))
    return checks, rep.classification, {"radius": inst.radius, "max_b2": inst.max_b2,
                                        "c_range": list(inst.c_range)}


def run_example72(sc):
    params = _example72_params(sc)
    comp = check_compatibility(params)
    checks = [check("compatibility: rotation", comp.rotation_residual, comp.tol),
              check("compatibility: norm", comp.norm_residual, comp.tol)]
    inst = build_example72(params, check=False)
    more, cls, extra = _projflat_checks(sc, params, inst)
    return checks + more, cls, extra


def run_simple_family(sc):
    p, n = sc["params"], _dim(sc)
    _need(p, "mu", "tau", "eta")
    inst = simple_family(float(p["mu"]), float(p["tau"]), _vector(p, "eta", n))
    return _projflat_checks(sc, inst.params, inst)


def run_deform_recipe(sc):
    p, n = sc["params"], _dim(sc)
    _need(p, "recipe", "b")
    triple = recipe(p["recipe"], **p.get("recipe_params", {}))
    a = np.array(p.get("a", np.eye(n).tolist()), dtype=float)
    if a.shape != (n, n) or not np.array_equal(a, a.T):
        raise ConfigError("'a' must be a symmetric n x n matrix")
    pair = deform_forward(constant_metric(a), constant_form(_vector(p, "b", n)), triple)
    samples = _samples(sc, n, 20, 0.5)
    rep = form_check(pair.h, pair.rho, samples)
    return [check("|r~| (Killing form)", rep.max_sym, _tol(sc, "residual", 1e-8)),
            check("|s~| (closed)", rep.max_antisym, _tol(sc, "residual", 1e-8))], \
        ("killing" if rep.is_killing else "conformal" if rep.is_conformal else "none"), {}


def run_isoS_navigation(sc):
    n = _dim(sc)
    sc["sampling"].setdefault("inner", 0.1)
    samples = _samples(sc, n, 50, 0.7)
    h = euclidean(n)
    rho = OneFormField(lambda x: x.copy(), jac=lambda x: np.eye(n), name="x dx")
    fc = form_check(h, rho, samples)
    checks = [check("conformal 1-form: |sigma - 1|", np.abs(fc.sigma - 1.0).max(), _tol(sc, "sigma", 1e-8)),
              check("conformal 1-form: trace-free part", fc.max_tracefree, _tol(sc, "sigma", 1e-8))]
    a, b = inverse_fields(h, rho, navigation_triple())
    rel = [isotropic_relation(a, b, x) for x in samples]
    v, x = _argmax_loc(np.array([r[0] for r in rel]), samples)
    checks.append(check("isotropic relation residual", v, _tol(sc, "residual", 1e-6), location=x))
    thetas = [r[1] for r in rel]
    return checks, "conformal" if fc.is_conformal else "none", {"theta_range": [min(thetas), max(thetas)]}


def run_douglas_check(sc):
    p = sc["params"]
    _need(p, "k1", "k2", "k3")
    kw = {k: p[k] for k in ("k1", "k2", "k3", "p0", "s_max") if k in p}
    phi = phi_family("douglas_ode", strict=bool(p.get("strict", True)), **kw)
    ss = np.linspace(-0.95 * phi.s_max, 0.95 * phi.s_max, 101)
    res = np.abs([douglas_ode_residual(phi, s) for s in ss])
    k = int(np.argmax(res))
    checks = [check("ODE residual", res[k], _tol(sc, "residual", 1e-6), location=[ss[k]]),
              check("phi(0) = 1", abs(phi(0.0) - 1.0), 1e-12),
              check("RK4 error estimate", phi.params["error_estimate"], _tol(sc, "accuracy", 1e-8))]
    if p.get("oracle") == "sqrt(1+s^2)":
        ss = np.linspace(0.0, min(0.5, phi.s_max), 51)
        err = np.abs([phi(s) - np.sqrt(1 + s * s) for s in ss])
        checks.append(check("oracle sqrt(1+s^2)", err.max(), _tol(sc, "oracle", 1e-8)))
    return checks, None, {}


def run_flow_check(sc):
    p, n = sc["params"], _dim(sc)
    system = p.get("system", "minkowski-dilation")
    t_values = [float(t) for t in p.get("t_values", [0.3])]
    s = sc["sampling"]
    count, seed = int(s.get("count", 20)), int(s.get("seed", 0))
    if system == "minkowski-dilation":
        _need(p, "tau", "b")
        tau = float(p["tau"])
        F = AlphaBetaMetric(euclidean(n), constant_form(_vector(p, "b", n)), phi_family("randers"))
        V, c, domain = linear_field(-2 * tau * np.eye(n)), tau, None
        radius = float(s.get("radius", 0.5))
    elif system == "example72":
        params = _example72_params(sc)
        inst = build_example72(params)
        F = AlphaBetaMetric(inst.chart, inst.beta, phi_family("randers"))
        V, c = inst.V, inst.c
        domain = lambda x, r=inst.radius: float(np.linalg.norm(x)) <= r
        radius = float(s.get("radius", min(0.3, inst.radius)))
    else:
        raise ConfigError(f"unknown flow system {system!r}")
    xs = num.ball_samples(n, count, radius, seed=seed)
    ys = num.unit_vectors(n, count, seed=seed + 1)
    rep = check_scaling(F, V, c, list(zip(xs, ys)), t_values, domain=domain)
    checks = [check("sigma form: relative error", rep.err_sigma, _tol(sc, "sigma", 1e-6))]
    if "c_form_min" in sc["tolerances"]:
        checks.append(check("constant-exponent form: relative error", rep.err_c,
                            _tol(sc, "c_form_min", 1e-2), ">="))
    else:
        checks.append(check("constant-exponent form: relative error", rep.err_c, _tol(sc, "c_form", 1e-6)))
    return checks, None, {"err_c": rep.err_c, "err_sigma": rep.err_sigma}


RUNNERS = {
    "theorem12": run_theorem12,
    "corollary41": _run_corollary("4.1"),
    "corollary42": _run_corollary("4.2"),
    "example72": run_example72,
    "simple-family": run_simple_family,
    "deform-recipe": run_deform_recipe,
    "flow-check": run_flow_check,
    "isoS-navigation": run_isoS_navigation,
    "douglas-check": run_douglas_check,
}

# errors that mean the scenario itself is unusable, as opposed to a failed check
INPUT_ERRORS = (ConfigError, InvalidFamilyParams, PreconditionViolation, CaseMismatch)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def run_scenario(sc):
    """Run a parsed scenario and return the report dictionary."""
    try:
        checks, cls, extra = RUNNERS[sc["kind"]](sc)
    except INPUT_ERRORS:
        raise
    except (ValueError, TypeError) as exc:
        if isinstance(exc, FinslerCVFError):
            checks, cls, extra = [check(f"error: {type(exc).__name__}: {exc}", 1.0, 0.0)], None, {}
        else:
            raise ConfigError(f"invalid parameters: {exc}") from None
    except FinslerCVFError as exc:
        checks, cls, extra = [check(f"error: {type(exc).__name__}: {exc}", 1.0, 0.0)], None, {}
    return _jsonable({
        "format": REPORT_FORMAT,
        "scenario": sc,
        "classification": cls,
        "checks": checks,
        "details": extra,
        "passed": all(c["passed"] for c in checks),
    })


def dumps(report):
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=True) + "\n"


def human(report, elapsed, threads):
    sc = report["scenario"]
    lines = [f"scenario: {sc.get('name', sc['kind'])} ({sc['kind']})"]
    if report["classification"] is not None:
        lines.append(f"classification: {report['classification']}")
    for key, val in report.get("details", {}).items():
        lines.append(f"{key}: {val}")
    for c in report["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        lines.append(f"  [{mark}] {c['name']}: {c['value']:.3e} {c['op']} {c['tol']:.1e}")
    lines.append(f"result: {'PASS' if report['passed'] else 'FAIL'}  "
                 f"({elapsed:.2f} s, threads={threads})")
    return "\n".join(lines) + "\n"


def _threads():
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        t = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if t < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    # sample loops run serially, which honours any cap
    return 1


def cmd_run(args, out, err):
    try:
        threads = _threads()
        sc = load_scenario(resolve(args.file))
        if args.seed is not None:
            sc["sampling"]["seed"] = args.seed
        if args.samples is not None:
            if args.samples < 1:
                raise ConfigError("--samples must be positive")
            sc["sampling"]["count"] = args.samples
        if args.tol is not None:
            sc["tolerances"]["residual"] = args.tol
        start = time.perf_counter()
        report = run_scenario(sc)
    except INPUT_ERRORS as exc:
        err.write(f"error: {exc}\n")
        return 2
    out.write(human(report, time.perf_counter() - start, threads))
    if args.out:
        try:
            Path(args.out).write_text(dumps(report), encoding="utf-8")
        except OSError as exc:
            err.write(f"error: cannot write report: {exc}\n")
            return 2
    return 0 if report["passed"] else 1


def cmd_list(args, out, err):
    for name, desc in bundled_scenarios().items():
        out.write(f"{name:32s} {desc}\n")
    return 0


def cmd_format(args, out, err):
    version = args.version or REPORT_VERSION
    if version not in SCHEMA:
        err.write(f"error: unknown report format version {version!r}; current is {REPORT_VERSION}\n")
        return 2
    out.write(f"version: {version}\n")
    out.write(json.dumps(SCHEMA[version], indent=2, sort_keys=True) + "\n")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="finsler-cvf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or bundled scenario")
    r.add_argument("file")
    r.add_argument("--out", help="write the machine-readable JSON report here")
    r.add_argument("--seed", type=int)
    r.add_argument("--samples", type=int)
    r.add_argument("--tol", type=float, help="override the main residual tolerance")
    r.set_defaults(func=cmd_run)
    sub.add_parser("list-scenarios", help="list bundled scenarios").set_defaults(func=cmd_list)
    f = sub.add_parser("report-format", help="print the report schema")
    f.add_argument("version", nargs="?")
    f.set_defaults(func=cmd_format)
    return ap


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    return args.func(args, out, err)


if __name__ == "__main__":
    sys.exit(main())
