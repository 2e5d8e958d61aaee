"""Run validated scenarios and turn their checks into verification reports."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import comparison_suite as cs
from .abp_experiment import covering_check, hessian_bound_check, jacobian_bound_check, solve_neumann_radial, \
    transport_radial
from .config import ConfigError, load_config
from .errors import NumericalFailure
from .inequality_verifier import InequalityParams, RadialTestFunction, SubmanifoldSpec, avr_estimate, \
    isoperimetric_check, sobolev_check_domain, sobolev_constant_domain, sobolev_constant_submanifold, \
    submanifold_check_flat
from .model_manifold import ModelManifold, TabulatedWarp, bishop_gromov_ratio, comparison_model, euclidean, \
    ricci_decay_check
from .ode_kernels import comparison_pair
from .profiles import profile_from_spec, profile_invariants
from .report import NUMERICAL_FAILURE, PASS, VerificationReport


def build_profile(spec):
    return profile_from_spec(spec.model_dump(exclude_none=True))


def build_manifold(spec, profile):
    if spec.warp == "euclidean":
        return euclidean(spec.dimension, spec.horizon)
    if spec.warp == "comparison":
        wp = build_profile(spec.warp_profile) if spec.warp_profile is not None else profile
        if wp is None:
            raise ValueError("comparison warp needs a profile")
        return comparison_model(spec.dimension, wp, spec.horizon)
    if spec.path is None:
        raise ValueError("tabulated warp needs a path")
    return ModelManifold(spec.dimension, TabulatedWarp.from_file(spec.path))


def resolve(sc):
    """Construct every object a scenario references; raises on unresolvable specs."""
    p = build_profile(sc.profile) if sc.profile is not None else None
    m = build_manifold(sc.manifold, p) if sc.manifold is not None else None
    params = sc.typed_params()
    if sc.command == "lemmas":
        for spec in params.profiles:
            build_profile(spec)
    for tf in [getattr(params, "test_function", None), *getattr(params, "test_functions", [])]:
        if tf is not None:
            RadialTestFunction(tf.kind, tf.params)
    return p, m, params


def _merge(scenario_id, inputs, parts, tol):
    """Combine sub-reports into one, prefixing their computed keys."""
    computed, status, messages = {}, PASS, []
    for key, rep in parts:
        computed.update({f"{key}.{k}": v for k, v in rep.computed.items()})
        if rep.status != PASS and status != "FAIL":
            status = rep.status
        if rep.message:
            messages.append(f"{key}: {rep.message}")
    return VerificationReport(scenario_id, inputs, computed, status, tol, message="; ".join(messages))


def _tol_dict(tol):
    return tol.model_dump()


def run_constants(sc, p, m, q, tol, seed):
    theta, B, b1 = q.theta, q.B, q.b1
    if B is None or b1 is None:
        if p is None:
            raise ValueError("constants scenario needs B and b1 or a profile")
        inv = profile_invariants(p)
        B = inv.B if B is None else B
        b1 = inv.b1 if b1 is None else b1
    if theta is None:
        if p is None or m is None:
            raise ValueError("constants scenario needs theta or a profile and manifold")
        theta = min(avr_estimate(m, p).theta, 1.0)
    ip = InequalityParams(q.n, theta, B, b1, q.r0, q.p)
    C = sobolev_constant_domain(ip) if q.case == "domain" else sobolev_constant_submanifold(ip)
    computed = {"B": B, "b1": b1, "theta": theta, "r0": q.r0, "constant": C}
    margins = {}
    if q.expected is not None:
        computed["margin"] = tol.equality - abs(C - q.expected)
        margins["margin"] = (computed["margin"], 0.0)
    return VerificationReport.from_margins(sc.id, q.model_dump(), computed, margins, _tol_dict(tol))


def run_lemmas(sc, p, m, q, tol, seed):
    seed = q.seed if q.seed is not None else seed
    profiles = [build_profile(s) for s in q.profiles] + cs.random_profile_batch(seed, q.random_count)
    if p is not None:
        profiles.insert(0, p)
    computed, margins = {}, {}
    for i, prof in enumerate(profiles):
        for res in cs.run_lemma_suite(prof, seed + i, q.T_asym, q.T_finite):
            key = f"p{i:02d}.{res.lemma_id}"
            computed[f"{key}.worst_slack"] = res.worst_slack
            computed[f"{key}.location"] = res.location
            # the growth check is a limit statement with a relative tolerance
            lim = tol.asymptotic * res.details["limit"] if res.lemma_id == "growth_exponent" else tol.inequality
            margins[key] = (res.worst_slack, lim)
            if res.lemma_id == "det_bound" and res.details.get("conjugate_time") is not None:
                margins[key] = (-math.inf, 0.0)
    computed["worst_slack"] = min(v for k, v in computed.items() if k.endswith("worst_slack")) if computed else 0.0
    inputs = {"seed": seed, "profiles": len(profiles), "T_asym": q.T_asym, "T_finite": q.T_finite}
    return VerificationReport.from_margins(sc.id, inputs, computed, margins, _tol_dict(tol))


def _equality_margin(margin, tol):
    """Slack form of the absolute test |margin| <= tol."""
    return tol - abs(margin)


def run_isoperimetric(sc, p, m, q, tol, seed):
    parts = []
    for R in q.radii:
        rep = isoperimetric_check(m, p, R, q.horizon, tol.inequality, sc.id)
        if q.expect_equality:
            rep = _as_equality(rep, tol)
        parts.append((f"r={R:g}", rep))
    return _merge(sc.id, {"radii": q.radii, "dimension": m.dimension}, parts, _tol_dict(tol))


def _as_equality(rep, tol):
    c = dict(rep.computed)
    c["equality_slack"] = _equality_margin(c["margin"], tol.equality)
    return VerificationReport.from_margins(rep.scenario_id, rep.inputs, c,
                                           {"margin": (c["equality_slack"], 0.0)}, {"equality": tol.equality})


def run_sobolev(sc, p, m, q, tol, seed):
    parts = []
    for R in q.radii:
        for j, tf in enumerate(q.test_functions):
            f = RadialTestFunction(tf.kind, tf.params)
            rep = sobolev_check_domain(m, p, R, f, q.horizon, tol.inequality, sc.id)
            if q.expect_equality:
                rep = _as_equality(rep, tol)
            parts.append((f"r={R:g}.f{j}", rep))
    return _merge(sc.id, {"radii": q.radii, "dimension": m.dimension}, parts, _tol_dict(tol))


def run_submanifold(sc, p, m, q, tol, seed):
    parts = [(kind, submanifold_check_flat(SubmanifoldSpec(kind, q.n, q.p), q.f, tol.inequality, sc.id))
             for kind in q.kinds]
    return _merge(sc.id, q.model_dump(), parts, _tol_dict(tol))


def run_abp(sc, p, m, q, tol, seed):
    f = RadialTestFunction(q.test_function.kind, q.test_function.params)
    sol = solve_neumann_radial(m, p, q.a, f)
    if not sol.compatible:
        raise NumericalFailure(f"Neumann boundary error {sol.boundary_error:.3g} exceeds tolerance")
    hess, hess_at = hessian_bound_check(sol)
    ts = transport_radial(sol, m, q.r, samples=q.samples)
    uncovered = covering_check(ts, m, q.a, q.r)
    jc = jacobian_bound_check(ts, p, sol)
    rt = tol.chain
    chain = [jc.det_integral - jc.annulus_volume * (1 - rt), jc.bound_integral - jc.det_integral * (1 - rt),
             jc.chain_integral - jc.bound_integral * (1 - rt)]
    computed = {
        "f_scale": sol.f_scale, "boundary_error": sol.boundary_error, "hessian_slack": hess,
        "hessian_location": hess_at, "contact_fraction": float(np.mean(ts.contact_flags)),
        "contact_margin": float(np.min(ts.contact_margin[ts.contact_flags], initial=0.0)), "uncovered": float(len(uncovered)),
        "jacobian_slack": jc.worst_slack, "conjugate_geodesics": float(jc.conjugate_geodesics),
        "annulus_volume": jc.annulus_volume, "det_integral": jc.det_integral,
        "bound_integral": jc.bound_integral, "chain_integral": jc.chain_integral,
        "matrix_crosscheck": jc.matrix_crosscheck,
    }
    margins = {
        "hessian": (hess, tol.inequality),
        "covering": (-float(len(uncovered)), 0.0),
        "jacobian": (jc.worst_slack, tol.inequality),
        "conjugate": (-float(jc.conjugate_geodesics), 0.0),
        "crosscheck": (rt - jc.matrix_crosscheck, 0.0),
    }
    for i, c in enumerate(chain):
        margins[f"chain{i}"] = (c, 0.0)
    if q.closed_form:
        n = m.dimension
        g = sol.grid
        errs = {
            "u_error": float(np.max(np.abs(sol.u - g * g / 2))),
            "u_prime_error": float(np.max(np.abs(sol.u_prime - g))),
            "det_error": float(np.max(np.abs(ts.jacobians[ts.contact_flags] - (1 + q.r) ** n))),
            "image_error": float(np.max(np.abs(ts.image_radii - (1 + q.r) * ts.source_samples))),
        }
        computed.update(errs)
        scale = {"u_error": 1.0, "u_prime_error": 1.0, "det_error": (1 + q.r) ** n, "image_error": 1 + q.r}
        for k, v in errs.items():
            margins[k] = (tol.equality * scale[k] - v, 0.0)
    return VerificationReport.from_margins(sc.id, q.model_dump(), computed, margins, _tol_dict(tol))


def run_bishop_gromov(sc, p, m, q, tol, seed):
    R = min(q.horizon, m.horizon)
    ricci = ricci_decay_check(m, p, R)
    radii, ratio, est = bishop_gromov_ratio(m, p, np.geomspace(1e-3, R, 600))
    computed = {"ricci_margin": ricci.worst_margin, "theta": est.theta, "horizon": est.horizon,
                "monotone_violation": est.monotone_violation, "drift": est.drift,
                "ratio_min": float(ratio.min()), "ratio_max": float(ratio.max())}
    margins = {
        "ricci": (0.0 if ricci.passed else -1.0, 0.0),
        "monotone": (-est.monotone_violation, 1e-10),
        "theta_le_1": (1.0 - est.theta, 1e-10),
    }
    if q.expect_theta is not None:
        computed["theta_error"] = abs(est.theta - q.expect_theta)
        margins["theta"] = (q.theta_tol - computed["theta_error"], 0.0)
    return VerificationReport.from_margins(sc.id, q.model_dump(), computed, margins, _tol_dict(tol))


def run_ode(sc, p, m, q, tol, seed):
    T = max([e.t for e in q.evaluations] + [q.growth_horizon or 0.0, 1.0])
    h1, h2 = comparison_pair(p, T)
    computed, margins = {}, {}
    for i, e in enumerate(q.evaluations):
        v = float((h1 if e.role == "h1" else h2)(e.t))
        computed[f"e{i}.{e.role}"] = v
        computed[f"e{i}.error"] = abs(v - e.expected)
        margins[f"e{i}"] = (tol.equality * max(1.0, abs(e.expected)) - abs(v - e.expected), 0.0)
    if q.growth_horizon is not None:
        Tg = q.growth_horizon
        limit = cs.growth_limit(profile_invariants(p).B)
        expo = float(Tg * h1.deriv(Tg) / h1(Tg))
        allowed = q.growth_tol if q.growth_tol is not None else tol.asymptotic * limit
        computed.update({"growth_exponent": expo, "growth_limit": limit, "growth_error": abs(expo - limit)})
        margins["growth"] = (allowed - abs(expo - limit), 0.0)
    return VerificationReport.from_margins(sc.id, q.model_dump(), computed, margins, _tol_dict(tol))


RUNNERS = {
    "constants": run_constants,
    "lemmas": run_lemmas,
    "isoperimetric": run_isoperimetric,
    "sobolev": run_sobolev,
    "submanifold": run_submanifold,
    "abp": run_abp,
    "bishop_gromov": run_bishop_gromov,
    "ode": run_ode,
}


def run_scenario(sc, base_tol, seed):
    """Run one scenario; numerical trouble becomes a NUMERICAL_FAILURE report."""
    tol = sc.resolved_tolerances(base_tol)
    t0 = time.perf_counter()
    try:
        p, m, q = resolve(sc)
        rep = RUNNERS[sc.command](sc, p, m, q, tol, seed)
    except Exception as exc:  # noqa: BLE001 - one bad scenario must not abort the batch
        rep = VerificationReport(sc.id, {"command": sc.command}, {}, NUMERICAL_FAILURE, _tol_dict(tol),
                                 message=f"{type(exc).__name__}: {exc}")
    rep.wall_time = time.perf_counter() - t0
    return rep


def _run_packed(args):
    return run_scenario(*args)


def validate_config(path):
    """Load a config and build every profile, manifold and test function it names."""
    cfg = load_config(path)
    for sc in cfg.scenario:
        try:
            resolve(sc)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"scenario {sc.id!r}: {exc}") from exc
    return cfg


def run_scenarios(path, seed=None, workers=None):
    """Run every scenario of a config file; reports come back in config order."""
    cfg = validate_config(path)
    seed = cfg.seed if seed is None else seed
    workers = cfg.workers if workers is None else workers
    jobs = [(sc, cfg.tolerances, seed) for sc in cfg.scenario]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_packed(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_packed, jobs))
