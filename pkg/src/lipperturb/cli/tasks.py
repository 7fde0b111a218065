"""Task runners behind the ``run`` verb.

Each runner returns a :class:`TaskResult`: a JSON-ready result block, the
list of guarantee checks performed (inequalities that must hold), and
figure descriptions for the plotting layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..atomic import (check_decomposition, dilate, elimination_rank, perturb_decomposition,
                      schauder_check, z_norm_violations)
from ..errors import UnsupportedConfigurationError
from ..frames import frame_bounds_estimate, perturb_frame
from ..maps import exact_inverse, exact_lipschitz, lip_estimate
from ..perturb import (bounds_barbagallo, bounds_guo, bounds_hilding, bounds_lambda2_one,
                       bounds_main, bounds_p_combined, bounds_soderlind, check_profile,
                       estimate_profile, estimate_profile_mu, given_profile, guo_epsilon_sweep,
                       invert_certified, picard_rate_violations, resolvent_scan)
from ..perturb.inversion import PICARD
from .scenario import Scenario, ScenarioError


@dataclass
class TaskResult:
    result: dict
    checks: list = field(default_factory=list)
    figures: list = field(default_factory=list)
    validates: str = ""

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def _le(a: float, b: float, tol: float) -> bool:
    return a <= b + tol * max(1.0, abs(b))


def resolve_profile(sc: Scenario, d: dict, S, T, where: str, frame_upper=None):
    if d.get("estimate"):
        sampler = sc.sampler(d.get("sampler"), default_count=40)
        if "mu_grid" in d:
            return estimate_profile_mu(S, T, sampler, d["mu_grid"],
                                       d.get("objective", "stability"), frame_upper or 1.0)
        return estimate_profile(S, T, sampler, d.get("objective"))
    if "lambda1" not in d or "lambda2" not in d:
        raise ScenarioError("profile needs lambda1 and lambda2, or estimate: true", where)
    return given_profile(d["lambda1"], d["lambda2"], d.get("mu", 0.0), frame_upper)


def exact_sandwich(S, T, rep, tol: float) -> dict | None:
    """Exact Lip(T), Lip(T^-1) for affine pairs, located against ``rep``."""
    try:
        lt = exact_lipschitz(T)
        Tinv = exact_inverse(T)
        lti = exact_lipschitz(Tinv) if Tinv is not None else None
    except UnsupportedConfigurationError:
        return None
    if lt is None or lti is None:
        return None
    return {"lip_T": lt, "lip_Tinv": lti,
            "lip_T_inside": _le(rep.lip_T_lower, lt, tol) and _le(lt, rep.lip_T_upper, tol),
            "lip_Tinv_inside": _le(rep.lip_Tinv_lower, lti, tol)
            and _le(lti, rep.lip_Tinv_upper, tol)}


def _lip_pair(S):
    lip_s = exact_lipschitz(S)
    Sinv = exact_inverse(S)
    lip_sinv = exact_lipschitz(Sinv) if Sinv is not None else None
    return lip_s, lip_sinv


# ----------------------------------------------------------------- runners

def task_estimate_lip(sc: Scenario, tol: float) -> TaskResult:
    p = sc.params
    m = sc.map(p["map"], "$.params.map")
    est = lip_estimate(m, sc.sampler(p.get("sampler")))
    exact = exact_lipschitz(m)
    out = TaskResult({"lower": est.lower, "bilip_lower": est.bilip_lower,
                      "pair_count": est.pair_count, "sample_seed": est.sample_seed,
                      "exact": exact}, validates="sampled Lipschitz number")
    if exact is not None:
        out.check("sampled lower bound <= exact Lipschitz number", _le(est.lower, exact, tol),
                  f"{est.lower!r} <= {exact!r}")
    return out


def task_estimate_profile(sc: Scenario, tol: float) -> TaskResult:
    p = sc.params
    S, T = sc.map(p["S"], "$.params.S"), sc.map(p["T"], "$.params.T")
    sampler = sc.sampler(p.get("sampler"))
    if "mu_grid" in p:
        prof = estimate_profile_mu(S, T, sampler, p["mu_grid"], p.get("objective", "stability"),
                                   p.get("frame_upper", 1.0))
    else:
        prof = estimate_profile(S, T, sampler, p.get("objective"))
    out = TaskResult({"profile": prof.to_dict()}, validates="two-constant perturbation condition")
    chk = check_profile(S, T, prof, sampler)
    out.check("profile satisfies every sampled pair", chk.passed,
              f"worst scaled violation {chk.max_violation:.3e}")
    lip_s, lip_sinv = _lip_pair(S)
    if lip_s and lip_sinv and prof.mu == 0.0:
        rep = bounds_main(prof.lambda1, prof.lambda2, lip_s, lip_sinv)
        out.result["bounds"] = rep.to_dict()
        sw = exact_sandwich(S, T, rep, 1e-9)
        if sw is not None:
            out.result["exact"] = sw
            out.check("exact Lip(T) inside bounds", sw["lip_T_inside"])
            out.check("exact Lip(T^-1) inside bounds", sw["lip_Tinv_inside"])
    out.figures.append({"kind": "frontier", "file": "frontier.png",
                        "frontier": [list(v) for v in prof.frontier],
                        "chosen": [prof.lambda1, prof.lambda2]})
    return out


def task_bounds(sc: Scenario, tol: float) -> TaskResult:
    p = dict(sc.params)
    f = p.pop("formula")

    def g(key, default=None):
        if key in p:
            return p[key]
        if default is None:
            raise ScenarioError(f"formula {f!r} needs parameter {key!r}", "$.params")
        return default

    out = TaskResult({"formula": f}, validates=f"bound formula {f}")
    if f == "main":
        rep = bounds_main(g("lambda1"), g("lambda2"), g("lip_s", 1.0), g("lip_sinv", 1.0))
    elif f == "hilding":
        rep = bounds_hilding(g("lambda"))
    elif f == "guo":
        rep = bounds_guo(g("lambda1"), g("lambda2"), g("eps"), g("lip_tsinv"),
                         g("lip_s", 1.0), g("lip_sinv", 1.0))
    elif f == "guo-sweep":
        sw = guo_epsilon_sweep(g("lambda1"), g("lambda2"), g("lip_tsinv"), g("eps_grid"),
                               g("lip_s", 1.0), g("lip_sinv", 1.0))
        out.result["sweep"] = sw.to_dict()
        out.figures.append({"kind": "guo", "file": "guo_sweep.png", "eps": sw.eps.tolist(),
                            "values": [None if not math.isfinite(v) else v
                                       for v in sw.lip_Tinv_upper.tolist()]})
        rep = sw.best
        if rep is None:
            out.check("some eps in the grid is admissible", False)
            return out
    elif f == "p-combined":
        rep = bounds_p_combined(g("lambda1"), g("lambda2"), g("p"), g("lip_s", 1.0),
                                g("lip_sinv", 1.0))
    elif f == "lambda2-one":
        out.result["lip_Tinv_upper"] = bounds_lambda2_one(g("lambda"), g("lip_sinv", 1.0))
        return out
    elif f == "soderlind":
        out.result["lip_Ainv_upper"] = bounds_soderlind(g("alpha"), g("beta"))
        return out
    else:
        out.result["lip_Ainv_upper"] = bounds_barbagallo(g("alpha"), g("beta"),
                                                         bool(p.get("hilbert", False)))
        return out
    out.result["report"] = rep.to_dict()
    out.check("lower <= upper for Lip(T)", rep.lip_T_lower <= rep.lip_T_upper)
    out.check("lower <= upper for Lip(T^-1)", rep.lip_Tinv_lower <= rep.lip_Tinv_upper)
    return out


def task_invert(sc: Scenario, tol: float) -> TaskResult:
    p = sc.params
    T = sc.map(p["T"], "$.params.T")
    S = sc.map(p["S"], "$.params.S") if "S" in p else None
    y = np.asarray(p["y"], dtype=float)
    if y.size != T.codomain.dim:
        raise ScenarioError(f"y has length {y.size}, T maps into R^{T.codomain.dim}", "$.params.y")
    from ..maps import identity
    prof = resolve_profile(sc, p["profile"], S or identity(T.domain), T, "$.params.profile")
    cert = invert_certified(T, y, S, prof, sc.solver(p.get("solver")),
                            lip_sinv=p.get("lip_sinv"), raise_on_failure=False)
    out = TaskResult({"profile": prof.to_dict(), "certificate": cert.to_dict()},
                     validates="certified inversion with a-posteriori error radius")
    out.check("solver converged", cert.converged, f"residual {cert.residual:.3e}")
    Tinv = exact_inverse(T)
    if Tinv is not None:
        x_star = Tinv(y)
        err = float(T.domain.norm_rows(cert.solution.coords - x_star))
        out.result["true_error"] = err
        out.check("true error <= error radius", err <= cert.error_radius,
                  f"{err:.3e} <= {cert.error_radius:.3e}")
    if cert.contraction_mode == PICARD:
        v = picard_rate_violations(cert)
        out.check("Picard residuals contract at rate q", v == 0, f"{v} violations")
    out.figures.append({"kind": "residuals", "file": "residuals.png",
                        "history": list(cert.residual_history), "q": cert.q,
                        "mode": cert.contraction_mode})
    return out


def task_resolvent_scan(sc: Scenario, tol: float) -> TaskResult:
    p = sc.params
    S, T = sc.map(p["S"], "$.params.S"), sc.map(p["T"], "$.params.T")
    sampler = sc.sampler(p.get("sampler"))
    prof = resolve_profile(sc, p.get("profile", {"estimate": True}), S, T, "$.params.profile")
    rep = resolvent_scan(S, T, prof, p["alpha_grid"], sampler)
    out = TaskResult({"profile": prof.to_dict(), "scan": rep.to_dict()},
                     validates="guaranteed resolvent half-line")
    if rep.affine:
        out.check("alpha S - T nonsingular on the guaranteed half-line", rep.passed,
                  f"violations at {list(rep.violations)}")
    out.figures.append({"kind": "resolvent", "file": "resolvent.png", "threshold": rep.threshold,
                        "alpha": [e.alpha for e in rep.entries],
                        "sample": [e.sample_bilip_lower for e in rep.entries],
                        "exact": [e.exact_min_singular for e in rep.entries]})
    return out


def task_frame_perturb(sc: Scenario, tol: float) -> TaskResult:
    p = sc.params
    F = sc.frame(p["frame"], "$.params.frame")
    T = sc.map(p["T"], "$.params.T")
    prof = resolve_profile(sc, p["profile"], F.synthesis, T, "$.params.profile",
                           frame_upper=F.claimed_bounds[1])
    G = perturb_frame(F, T, prof, sc.sampler(p.get("sampler"), default_count=30),
                      sc.solver(p.get("solver")))
    est = frame_bounds_estimate(G, sc.sampler(p.get("validation_sampler"), 30, offset=7))
    out = TaskResult({"profile": prof.to_dict(), "original_bounds": list(F.claimed_bounds),
                      "claimed_bounds": list(G.claimed_bounds), "empirical": est.to_dict()},
                     validates="frame stability under a three-constant perturbation")
    out.check("empirical bounds inside claimed bounds", est.within(G.claimed_bounds, tol),
              f"[{est.a_emp:.6g}, {est.b_emp:.6g}] vs [{G.claimed_bounds[0]:.6g}, "
              f"{G.claimed_bounds[1]:.6g}]")
    out.check("reconstruction T(theta_g x) = x", est.reconstruction_max_error <= 1e-7,
              f"max error {est.reconstruction_max_error:.3e}")
    out.figures.append({"kind": "bounds", "file": "frame_bounds.png",
                        "claimed": list(G.claimed_bounds), "original": list(F.claimed_bounds),
                        "empirical": [est.a_emp, est.b_emp]})
    return out


def task_atomic_perturb(sc: Scenario, tol: float) -> TaskResult:
    p = sc.params
    D = sc.decomposition(p["decomposition"], "$.params.decomposition")
    W = np.asarray(p["new_atoms"], dtype=float)
    if W.shape != D.atoms.shape:
        raise ScenarioError(f"new_atoms must have shape {list(D.atoms.shape)}", "$.params.new_atoms")
    prof = resolve_profile(sc, p["profile"], D.synthesis(), D.synthesis(W), "$.params.profile",
                           frame_upper=D.claimed_bounds[1])
    E = perturb_decomposition(D, W, prof, sc.sampler(p.get("sampler"), default_count=30),
                              sc.solver(p.get("solver")))
    rep = check_decomposition(E, sc.sampler(p.get("validation_sampler"), 30, offset=7), tol)
    out = TaskResult({"profile": prof.to_dict(), "original_bounds": list(D.claimed_bounds),
                      "claimed_bounds": list(E.claimed_bounds), "validation": rep.to_dict()},
                     validates="atomic decomposition perturbation")
    out.check("perturbed decomposition passes validation", rep.passed,
              f"bounds_ok={rep.bounds_ok}, reconstruction error {rep.reconstruction_max_error:.3e}")
    out.figures.append({"kind": "bounds", "file": "atomic_bounds.png",
                        "claimed": list(E.claimed_bounds), "original": list(D.claimed_bounds),
                        "empirical": [rep.a_emp, rep.b_emp]})
    return out


def task_dilate(sc: Scenario, tol: float) -> TaskResult:
    p = sc.params
    D = sc.decomposition(p["decomposition"], "$.params.decomposition")
    res = dilate(D, samples=int(p.get("samples", 100)), seed=sc.seed)
    zn = z_norm_violations(res.Z, count=10_000, seed=sc.seed)
    out = TaskResult({"dilation": res.to_dict(), "z_norm": zn},
                     validates="dilation to a space with a basis and an idempotent P")
    for key in ("idempotence_err", "reconstruction_err", "atom_image_err"):
        out.check(f"{key} <= 1e-10", res.checks[key] <= 1e-10, f"{res.checks[key]:.3e}")
    out.check("Z norm: triangle inequality and homogeneity",
              zn["triangle"] == 0 and zn["homogeneity"] == 0 and zn["nonpositive"] == 0)
    M = res.matrix()
    if M is not None:
        out.result["P_rank"] = elimination_rank(M)
        out.figures.append({"kind": "matrix", "file": "dilation_P.png", "matrix": M.tolist(),
                            "title": "matrix of P"})
    return out


def task_schauder(sc: Scenario, tol: float) -> TaskResult:
    p = sc.params
    X = sc.space(p["space"], "$.params.space")
    rep = schauder_check(np.asarray(p["atoms"], dtype=float), X,
                         sc.sampler(p.get("sampler"), default_count=400))
    return TaskResult({"schauder": rep.to_dict()}, validates="finite basis characterisation")


def task_demo(sc: Scenario, tol: float) -> TaskResult:
    from .demos import run_demo
    return run_demo(sc.params["demo"], sc.seed, tol)


RUNNERS = {
    "estimate-lip": task_estimate_lip, "estimate-profile": task_estimate_profile,
    "bounds": task_bounds, "invert": task_invert, "resolvent-scan": task_resolvent_scan,
    "frame-perturb": task_frame_perturb, "atomic-perturb": task_atomic_perturb,
    "dilate": task_dilate, "schauder-check": task_schauder, "demo": task_demo,
}


def run_task(sc: Scenario, tol: float) -> TaskResult:
    return RUNNERS[sc.task](sc, tol)
