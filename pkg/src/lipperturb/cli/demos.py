"""Built-in demo gallery.

Every demo is deterministic for a given seed and carries its own checks,
each backed by a closed form or an exact affine oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..atomic import (basis_decomposition, check_decomposition, dilate,
                      elimination_rank, graph_embedding, lift_decomposition, schauder_check,
                      z_norm_violations)
from ..frames import MetricFrame, atomic_from_frame, frame_bounds_estimate, frame_from_atomic
from ..maps import (affine, componentwise, composite, exact_lipschitz, identity,
                    linear_functional, translate_to_origin)
from ..perturb import (bounds_barbagallo, bounds_hilding, bounds_lambda2_one, bounds_main,
                       bounds_p_combined, bounds_soderlind, estimate_profile, guo_epsilon_sweep,
                       pair_stats, reduce_p_combined)
from ..sampling import SamplerConfig
from ..spaces import lp
from .tasks import TaskResult, exact_sandwich, run_task

DEFAULT_SEED = 0


@dataclass(frozen=True)
class Demo:
    name: str
    validates: str
    fn: Callable[[int, float], TaskResult]


def _rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def _well_conditioned(rng, n: int, spread: float = 0.3) -> np.ndarray:
    G = rng.standard_normal((n, n))
    return np.eye(n) + spread * G / np.linalg.norm(G, 2)


def _mercedes() -> tuple[np.ndarray, MetricFrame]:
    V = np.array([[0.0, 1.0], [-math.sqrt(3) / 2, -0.5], [math.sqrt(3) / 2, -0.5]])
    X, seq = lp(2), lp(3)
    sv = np.linalg.svd(V, compute_uv=False)
    F = MetricFrame(tuple(linear_functional(v, X, name=f"f{k}") for k, v in enumerate(V)), seq,
                    affine(np.linalg.pinv(V), None, seq, X, name="synthesis"),
                    (float(sv.min()), float(sv.max())), name="mercedes")
    return V, F


def _scenario(name: str, seed: int, task: str, params: dict, **sections) -> TaskResult:
    from .scenario import scenario_from_dict
    raw = {"schema_version": 1, "name": name, "seed": seed, "task": task, "params": params}
    raw.update(sections)
    return run_task(scenario_from_dict(raw), 1e-9)


# -------------------------------------------------------------------- demos

def demo_hilding(seed: int, tol: float) -> TaskResult:
    rep = bounds_hilding(0.0)
    out = TaskResult({"report": rep.to_dict()})
    out.check("lambda = 0 gives every bound equal to 1", all(v == 1.0 for v in rep.values()))
    grid = np.linspace(0.0, 0.95, 20)
    worst = max(abs(a - b) for lam in grid
                for a, b in zip(bounds_hilding(lam).values(), bounds_main(lam, lam).values()))
    out.result["grid_max_difference"] = worst
    out.check("equal-constant form matches the general bounds on a grid", worst == 0.0)
    return out


def demo_main(seed: int, tol: float) -> TaskResult:
    rng = np.random.default_rng(seed)
    X = lp(3)
    A = _well_conditioned(rng, 3)
    E = rng.standard_normal((3, 3))
    E *= 0.15 / np.linalg.norm(E, 2)
    S, T = affine(A, None, X, X, "S"), affine(A + E, None, X, X, "T")
    prof = estimate_profile(S, T, SamplerConfig(count=40, seed=seed))
    lip_s, lip_sinv = exact_lipschitz(S), float(np.linalg.norm(np.linalg.inv(A), 2))
    rep = bounds_main(prof.lambda1, prof.lambda2, lip_s, lip_sinv)
    sw = exact_sandwich(S, T, rep, tol)
    out = TaskResult({"profile": prof.to_dict(), "report": rep.to_dict(), "exact": sw})
    out.check("exact Lip(T) inside bounds", sw["lip_T_inside"])
    out.check("exact Lip(T^-1) inside bounds", sw["lip_Tinv_inside"])
    out.figures.append({"kind": "frontier", "file": "frontier.png",
                        "frontier": [list(v) for v in prof.frontier],
                        "chosen": [prof.lambda1, prof.lambda2]})
    return out


def demo_translation(seed: int, tol: float) -> TaskResult:
    rng = np.random.default_rng(seed)
    X = lp(3)
    A = _well_conditioned(rng, 3)
    T = composite([affine(A, rng.standard_normal(3), X, X),
                   componentwise("tanh", X, eps=0.2, beta=1.0)], name="T")
    Tt = translate_to_origin(T)
    S = identity(X)
    sam = SamplerConfig(count=30, seed=seed)
    a, b = pair_stats(S, T, sam), pair_stats(S, Tt, sam)
    same = all(np.array_equal(getattr(a, k), getattr(b, k)) for k in "strc")
    at_zero = float(np.abs(Tt(np.zeros(3))).max())
    out = TaskResult({"T_at_zero": T(np.zeros(3)).tolist(), "translate_at_zero": at_zero})
    out.check("translate vanishes at the origin", at_zero == 0.0)
    out.check("pair statistics unchanged by translation", same)
    return out


def demo_p_combined(seed: int, tol: float) -> TaskResult:
    p, delta = 0.5, 0.1
    # T = (1 + delta) I against S = I: the smallest equal constants for exponent p
    lam = delta / (1.0 + (1.0 + delta) ** p) ** (1.0 / p)
    l1, l2 = reduce_p_combined(lam, lam, p)
    rep = bounds_p_combined(lam, lam, p)
    k = 2.0 ** (1.0 / p - 1.0)
    out = TaskResult({"p": p, "lambda": lam, "reduced": [l1, l2], "report": rep.to_dict()})
    out.check("p < 1 scales constants by 2^(1/p - 1)",
              abs(l1 - k * lam) <= 1e-15 and abs(l2 - k * lam) <= 1e-15)
    out.check("p >= 1 leaves constants unchanged", reduce_p_combined(0.3, 0.4, 2.0) == (0.3, 0.4))
    out.check("exact Lip(T) = 1 + delta inside bounds",
              rep.lip_T_lower <= 1 + delta <= rep.lip_T_upper)
    out.check("exact Lip(T^-1) inside bounds",
              rep.lip_Tinv_lower <= 1 / (1 + delta) <= rep.lip_Tinv_upper)
    return out


def demo_lambda2_one(seed: int, tol: float) -> TaskResult:
    # T = c Q with Q a rotation by phi, S = I on l2(2):
    # ||dT - dx|| = k ||dx||, ||dT|| = c ||dx||, k = |c e^{i phi} - 1|
    rows = []
    out = TaskResult({})
    for c, phi in ((0.6, 0.5), (0.4, 0.2), (1.5, 1.0)):
        k = math.hypot(c * math.cos(phi) - 1.0, c * math.sin(phi))
        lam = max(0.0, k - c)
        bound = bounds_lambda2_one(lam, 1.0)
        rows.append({"c": c, "phi": phi, "lambda": lam, "lip_Tinv": 1 / c, "upper": bound})
        out.check(f"c={c}, phi={phi}: Lip(T^-1) <= 2/(1-lambda)", 1 / c <= bound * (1 + tol))
    out.result["cases"] = rows
    return out


def demo_guo(seed: int, tol: float) -> TaskResult:
    c, phi = 1.0, 0.6
    k = math.hypot(c * math.cos(phi) - 1.0, c * math.sin(phi))
    l2 = 0.5
    l1 = max(0.0, k - l2 * c)
    sw = guo_epsilon_sweep(l1, l2, c, np.linspace(0.01, 0.49, 25))
    rep = sw.best
    out = TaskResult({"lambda1": l1, "lambda2": l2, "lip_tsinv": c, "sweep": sw.to_dict()})
    out.check("some eps is admissible", rep is not None)
    if rep is not None:
        out.check("exact Lip(T^-1) below best swept upper bound", 1 / c <= rep.lip_Tinv_upper)
        out.check("exact Lip(T) inside swept bounds", rep.lip_T_lower <= c <= rep.lip_T_upper)
    out.figures.append({"kind": "guo", "file": "guo_sweep.png", "eps": sw.eps.tolist(),
                        "values": sw.to_dict()["lip_Tinv_upper"]})
    return out


def demo_soderlind(seed: int, tol: float) -> TaskResult:
    alpha, beta = 2.0, 0.3
    Q = _rotation(0.7 + 0.1 * seed)
    A = (np.eye(2) + beta * Q) / alpha  # ||alpha A - I|| = beta exactly
    exact = float(np.linalg.norm(np.linalg.inv(A), 2))
    bound = bounds_soderlind(alpha, beta)
    via_main = alpha * bounds_main(beta, 0.0).lip_Tinv_upper
    out = TaskResult({"alpha": alpha, "beta": beta, "lip_Ainv": exact, "upper": bound})
    out.check("exact Lip(A^-1) <= alpha/(1-beta)", exact <= bound * (1 + tol))
    out.check("agrees with the general bound scaled by alpha", abs(bound - via_main) <= 1e-12)
    return out


def demo_barbagallo(seed: int, tol: float) -> TaskResult:
    alpha, beta = 1.5, 0.3
    Q = _rotation(1.1 + 0.1 * seed)
    A = alpha * np.linalg.inv(np.eye(2) + beta * Q)  # ||dA - alpha dx|| = beta ||dA||
    exact = float(np.linalg.norm(np.linalg.inv(A), 2))
    gen, hil = bounds_barbagallo(alpha, beta), bounds_barbagallo(alpha, beta, hilbert=True)
    out = TaskResult({"alpha": alpha, "beta": beta, "lip_Ainv": exact,
                      "upper_general": gen, "upper_hilbert": hil})
    out.check("exact Lip(A^-1) <= (1+beta)/alpha", exact <= hil * (1 + tol))
    out.check("exact Lip(A^-1) <= (1-beta)/(alpha(1-2beta))", exact <= gen * (1 + tol))
    return out


def demo_inversion(seed: int, tol: float) -> TaskResult:
    rng = np.random.default_rng(seed)
    A = _well_conditioned(rng, 3)
    y = rng.standard_normal(3).round(6).tolist()
    maps = {"S": {"kind": "affine", "matrix": A.tolist(), "space": "X"},
            "T": {"kind": "composite", "children": [
                "S", {"kind": "componentwise", "family": "tanh", "space": "X",
                      "params": {"eps": 0.25, "beta": 1.0}}]}}
    return _scenario("certified-inversion", seed, "invert",
                     {"T": "T", "S": "S", "y": y, "profile": {"lambda1": 0.25, "lambda2": 0.0}},
                     spaces={"X": {"dim": 3}}, maps=maps)


def demo_resolvent(seed: int, tol: float) -> TaskResult:
    rng = np.random.default_rng(seed)
    A = _well_conditioned(rng, 3)
    E = rng.standard_normal((3, 3))
    E *= 0.2 / np.linalg.norm(E, 2)
    maps = {"S": {"kind": "affine", "matrix": A.tolist(), "space": "X"},
            "T": {"kind": "affine", "matrix": (A + E).tolist(), "space": "X"}}
    return _scenario("resolvent-scan", seed, "resolvent-scan",
                     {"S": "S", "T": "T", "alpha_grid": np.linspace(-2, 2, 41).round(6).tolist(),
                      "profile": {"estimate": True}},
                     spaces={"X": {"dim": 3}}, maps=maps)


def demo_stability(seed: int, tol: float) -> TaskResult:
    V, _ = _mercedes()
    maps = {"T": {"kind": "composite", "children": [
        {"kind": "affine", "matrix": np.linalg.pinv(V).tolist(), "domain": "seq", "codomain": "X"},
        {"kind": "componentwise", "family": "tanh", "space": "X",
         "params": {"eps": 0.3, "beta": 1.0}}]}}
    frames = {"F": {"analysis_matrix": V.tolist(), "space": "X", "seq_space": "seq"}}
    return _scenario("stability-frame", seed, "frame-perturb",
                     {"frame": "F", "T": "T", "profile": {"lambda1": 0.3, "lambda2": 0.0}},
                     spaces={"X": {"dim": 2}, "seq": {"dim": 3}}, maps=maps, frames=frames)


def demo_equivalence(seed: int, tol: float) -> TaskResult:
    V, F = _mercedes()
    D = atomic_from_frame(F)
    F2 = frame_from_atomic(D)
    sam = SamplerConfig(count=30, seed=seed)
    rep = check_decomposition(D, sam, tol)
    est = frame_bounds_estimate(F2, sam)
    atoms_err = float(np.abs(D.atoms - np.linalg.pinv(V).T).max())
    out = TaskResult({"atoms": D.atoms.tolist(), "validation": rep.to_dict(),
                      "round_trip": est.to_dict()})
    out.check("atoms equal S e_n", atoms_err <= 1e-12, f"{atoms_err:.2e}")
    out.check("decomposition from frame validates", rep.passed)
    out.check("frame from decomposition keeps bounds and reconstructs",
              est.within(F.claimed_bounds, tol) and est.reconstruction_max_error <= 1e-12)
    return out


def _lifted(seed: int):
    X = lp(2)
    phi = componentwise("tanh", X, eps=0.3, beta=1.0)
    A, B, consts = graph_embedding(phi)
    base = basis_decomposition(np.eye(4), lp(4))
    L = lift_decomposition(base, A, B, consts, SamplerConfig(count=30, seed=seed))
    return L, consts


def demo_lifting(seed: int, tol: float) -> TaskResult:
    L, consts = _lifted(seed)
    rep = check_decomposition(L, SamplerConfig(count=30, seed=seed + 1), tol)
    out = TaskResult({"embedding_constants": list(consts), "atoms": L.atoms.tolist(),
                      "claimed_bounds": list(L.claimed_bounds), "validation": rep.to_dict()})
    out.check("lifted decomposition validates", rep.passed)
    return out


def demo_dilation(seed: int, tol: float) -> TaskResult:
    _, F = _mercedes()
    out = TaskResult({})
    for label, dec in (("frame", atomic_from_frame(F)), ("lifted", _lifted(seed)[0])):
        res = dilate(dec, samples=100, seed=seed)
        zn = z_norm_violations(res.Z, count=10_000, seed=seed)
        block = {"dilation": res.to_dict(), "z_norm": zn}
        M = res.matrix()
        if M is not None:
            block["P_rank"] = elimination_rank(M)
        out.result[label] = block
        for key in ("idempotence_err", "reconstruction_err", "atom_image_err"):
            out.check(f"{label}: {key} <= 1e-10", res.checks[key] <= 1e-10)
        out.check(f"{label}: Z norm is a norm on samples", not any(zn[k] for k in
                  ("triangle", "homogeneity", "nonpositive")))
    out.check("zero atoms trigger the direct-sum case", out.result["lifted"]["dilation"]["case"] == "ii")
    return out


def demo_schauder(seed: int, tol: float) -> TaskResult:
    X = lp(2)
    eps = 1e-2
    near = schauder_check(np.array([[1.0, 0.0], [1.0, eps]]), X, SamplerConfig(count=400, seed=seed))
    dep = schauder_check(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), X)
    exact = math.sqrt(1 + eps * eps) / eps  # norm of the first partial-sum projection
    out = TaskResult({"near_dependent": near.to_dict(), "dependent": dep.to_dict(),
                      "exact_constant": exact})
    out.check("near-dependent pair passes with the exact constant",
              near.passed and abs(near.basis_constant_estimate - exact) <= 1e-9 * exact)
    out.check("dependent atoms are rejected", not dep.passed)
    return out


def demo_atomic_perturb(seed: int, tol: float) -> TaskResult:
    V, F = _mercedes()
    delta = 0.05
    D = atomic_from_frame(F)
    decomps = {"D": {"from_frame": "F"}}
    frames = {"F": {"analysis_matrix": V.tolist(), "space": "X", "seq_space": "seq"}}
    out = _scenario("atomic-perturbation", seed, "atomic-perturb",
                    {"decomposition": "D", "new_atoms": ((1 + delta) * D.atoms).tolist(),
                     "profile": {"lambda1": delta, "lambda2": 0.0}},
                    spaces={"X": {"dim": 2}, "seq": {"dim": 3}}, frames=frames,
                    decompositions=decomps)
    from ..atomic import perturb_decomposition
    from ..perturb import given_profile
    E = perturb_decomposition(D, (1 + delta) * D.atoms, given_profile(delta, 0.0),
                              SamplerConfig(count=30, seed=seed))
    X = np.random.default_rng(seed).standard_normal((20, 2))
    err = float(np.abs(E.theta(X) - D.theta(X) / (1 + delta)).max())
    out.result["closed_form_error"] = err
    out.check("g_n = f_n / (1 + delta)", err <= 1e-9, f"{err:.2e}")
    return out


CATALOG: tuple[Demo, ...] = (
    Demo("hilding-identity", "equal-constant perturbation of the identity", demo_hilding),
    Demo("casazza-kalton-main",
         "two-constant perturbation: two-sided bounds on Lip(T) and Lip(T^-1)", demo_main),
    Demo("translation-normalization",
         "reduction to maps fixing the origin by translation", demo_translation),
    Demo("p-combined", "p-combined perturbation inequality and its reduction", demo_p_combined),
    Demo("lambda2-one", "Lip(T^-1) bound when lambda2 equals 1", demo_lambda2_one),
    Demo("guo-epsilon-sweep", "eps-family of bounds for lambda2 in [0, 1]", demo_guo),
    Demo("soderlind", "inverse bound for a scaled near-identity map", demo_soderlind),
    Demo("barbagallo", "inverse bound for the alpha-monotone perturbation", demo_barbagallo),
    Demo("certified-inversion",
         "inversion with an error radius from the inverse Lipschitz bound", demo_inversion),
    Demo("resolvent-scan", "invertibility of alpha S - T below the threshold", demo_resolvent),
    Demo("stability-frame", "stability of metric frames under three-constant perturbation",
         demo_stability),
    Demo("frame-atomic-equivalence",
         "metric frames with linear synthesis are atomic decompositions", demo_equivalence),
    Demo("lifting", "transport of an atomic decomposition through a bi-Lipschitz embedding",
         demo_lifting),
    Demo("lippel-dilation", "dilation of an atomic decomposition to a space with a basis",
         demo_dilation),
    Demo("schauder-check", "finite basis characterisation by a uniform partial-sum bound",
         demo_schauder),
    Demo("atomic-perturbation", "perturbation of the atoms of a Lipschitz decomposition",
         demo_atomic_perturb),
)

DEMOS = {d.name: d for d in CATALOG}


def list_demos() -> list[tuple[str, str]]:
    return [(d.name, d.validates) for d in CATALOG]


def run_demo(name: str, seed: int = DEFAULT_SEED, tol: float = 1e-9) -> TaskResult:
    from .scenario import ScenarioError
    if name not in DEMOS:
        raise ScenarioError(f"unknown demo {name!r}; run 'lipperturb demos' for the list",
                            "$.params.demo")
    d = DEMOS[name]
    out = d.fn(seed, tol)
    out.validates = d.validates
    out.result = {"demo": name, **out.result}
    return out
