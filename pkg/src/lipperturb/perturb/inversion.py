"""Certified inversion of a perturbed map.

Solve ``T(x) = y`` by reducing to ``R(u) = y`` with ``R = T o S^-1``.  When
``q = (l1 + l2)/(1 - l2) < 1`` the map ``u -> u - (R(u) - y)`` is a
q-contraction and plain Picard iteration is used.  Otherwise a damped
finite-difference Newton search with seeded restarts produces a candidate.
Either way the returned error radius is the a-posteriori bound

    ||x - x*|| <= (1 + l2)/(1 - l1) * Lip(S^-1) * ||T(x) - y||,

with the residual inflated by a floating-point evaluation allowance.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, NonconvergenceError, UnsupportedConfigurationError
from ..maps import (MapHandle, exact_inverse, family_constants, identity,
                    lip_exact_affine, lip_estimate)
from ..sampling import SamplerConfig
from ..spaces import Vector
from .bounds import q_contraction_rate
from .profile import PerturbationProfile

PICARD = "picard-contractive"
BEST_EFFORT = "best-effort-certified"
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 500
    target: float = 1e-12  # residual target, relative to max(1, ||y||)
    restarts: int = 4
    seed: int = 0
    fd_step: float | None = None
    min_damping: float = 2.0 ** -30

    def to_dict(self) -> dict:
        return {"max_iters": self.max_iters, "target": self.target, "restarts": self.restarts,
                "seed": self.seed, "fd_step": self.fd_step, "min_damping": self.min_damping}

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(**d)


@dataclass(frozen=True)
class InversionCertificate:
    solution: Vector
    residual: float
    error_radius: float
    iterations: int
    contraction_mode: str
    q: float
    lip_tinv_upper: float
    lip_sinv: float
    lip_sinv_source: str
    rounding_allowance: float = 0.0
    residual_history: tuple[float, ...] = ()
    converged: bool = True

    def to_dict(self) -> dict:
        return {"solution": self.solution.coords.tolist(), "residual": self.residual,
                "rounding_allowance": self.rounding_allowance,
                "error_radius": self.error_radius, "iterations": self.iterations,
                "contraction_mode": self.contraction_mode, "q": self.q,
                "lip_tinv_upper": self.lip_tinv_upper, "lip_sinv": self.lip_sinv,
                "lip_sinv_source": self.lip_sinv_source,
                "residual_history": list(self.residual_history), "converged": self.converged}


def resolve_lip_sinv(S: MapHandle, S_inv: MapHandle, lip_sinv: float | None,
                     sampler: SamplerConfig | None = None) -> tuple[float, str]:
    if lip_sinv is not None:
        return float(lip_sinv), "given"
    if S_inv.kind == "affine":
        try:
            return lip_exact_affine(S_inv), "exact"
        except UnsupportedConfigurationError:
            pass
    if S.kind == "componentwise":
        lo, _ = family_constants(S.params["family"], S.params)
        if lo > 0:
            return 1.0 / lo, "exact"
    est = lip_estimate(S_inv, sampler or SamplerConfig(count=60, seed=0))
    return est.lower, "sampled-lower-bound"


def rounding_allowance(T: MapHandle, x: np.ndarray, y: np.ndarray, Tx: np.ndarray,
                       lip_t: float | None) -> float:
    """Generous bound on the floating-point error of the computed residual."""
    cod = T.codomain
    mag = float(cod.norm_rows(y) + cod.norm_rows(Tx) + cod.norm_rows(T(np.zeros_like(x))))
    if lip_t is not None and math.isfinite(lip_t):
        mag += lip_t * float(T.domain.norm_rows(x))
    return 64.0 * max(x.size, y.size) * _EPS * mag


def invert_certified(T: MapHandle, y, S: MapHandle | None = None,
                     profile: PerturbationProfile | None = None,
                     cfg: SolverConfig | None = None, *, S_inv: MapHandle | None = None,
                     lip_sinv: float | None = None, lip_s: float | None = None,
                     raise_on_failure: bool = True) -> InversionCertificate:
    """Approximate ``T^-1(y)`` together with a guaranteed error radius.

    ``S`` defaults to the identity on ``T.domain``; its inverse is taken from
    ``S_inv`` or derived in closed form.  ``profile`` supplies the
    constants; a mu > 0 profile must carry its frame bound.
    """
    cfg = cfg or SolverConfig()
    if profile is None:
        raise ValueError("invert_certified needs perturbation constants")
    S = S or identity(T.domain)
    l1 = profile.effective_lambda1()
    l2 = profile.lambda2
    if not l1 < 1.0:
        raise DomainError(f"lambda1 (effective) = {l1!r} must be < 1", parameter="lambda1")
    if not l2 < 1.0:
        raise DomainError(f"lambda2 = {l2!r} must be < 1", parameter="lambda2")
    S_inv = S_inv or exact_inverse(S)
    if S_inv is None:
        raise UnsupportedConfigurationError(f"no inverse available for reference map {S.label}")
    lsinv, source = resolve_lip_sinv(S, S_inv, lip_sinv)
    lip_tinv_upper = (1.0 + l2) / (1.0 - l1) * lsinv
    if lip_s is None:
        try:
            lip_s = lip_exact_affine(S) if S.kind == "affine" else None
        except UnsupportedConfigurationError:
            lip_s = None
    lip_t = None if lip_s is None else (1.0 + l1) / (1.0 - l2) * lip_s

    yv = y.coords if isinstance(y, Vector) else np.asarray(y, dtype=float).reshape(-1)
    cod = T.codomain
    tgt = cfg.target * max(1.0, float(cod.norm_rows(yv)))
    q = q_contraction_rate(l1, l2)

    def R(U):
        return T(S_inv(U))

    def res_norm(U):
        return cod.norm_rows(R(U) - yv)

    if q < 1.0:
        mode = PICARD
        u, hist, iters = _picard(R, yv, cod, tgt, cfg.max_iters)
    else:
        mode = BEST_EFFORT
        u, hist, iters = _best_effort(R, res_norm, yv, cod, tgt, cfg)

    x = S_inv(u)
    Tx = T(x)
    residual = float(cod.norm_rows(Tx - yv))
    allowance = rounding_allowance(T, x, yv, Tx, lip_t)
    converged = residual <= tgt
    cert = InversionCertificate(
        solution=Vector(T.domain, x), residual=residual,
        error_radius=lip_tinv_upper * (residual + allowance), iterations=iters,
        contraction_mode=mode, q=q, lip_tinv_upper=lip_tinv_upper, lip_sinv=lsinv,
        lip_sinv_source=source, rounding_allowance=allowance,
        residual_history=tuple(hist), converged=converged)
    if not converged and raise_on_failure:
        raise NonconvergenceError(
            f"residual {residual:.3e} above target {tgt:.3e} after {iters} iterations "
            f"({mode}, q = {q:.4g})", certificate=cert)
    return cert


def _picard(R, y, cod, tgt, max_iters):
    u = y.copy()
    hist = []
    iters = 0
    while True:
        r = R(u) - y
        res = float(cod.norm_rows(r))
        hist.append(res)
        if res <= tgt or iters >= max_iters:
            return u, hist, iters
        u = u - r
        iters += 1


def _fd_jacobian(R, u, h0):
    h = (h0 if h0 else math.sqrt(_EPS)) * np.maximum(1.0, np.abs(u))
    pts = np.vstack([u, u + np.diag(h)])
    vals = R(pts)
    return (vals[1:] - vals[0]).T / h, vals[0]


def _newton_run(R, res_norm, y, u, tgt, cfg, budget):
    hist = []
    best_u, best_res = u, float(res_norm(u))
    iters = 0
    while iters < budget:
        J, Ru = _fd_jacobian(R, u, cfg.fd_step)
        F = Ru - y
        res = float(res_norm(u))
        hist.append(res)
        if res < best_res:
            best_u, best_res = u, res
        if res <= tgt:
            break
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        t = 1.0
        while t >= cfg.min_damping:
            cand = u + t * step
            if float(res_norm(cand)) < (1.0 - 1e-4 * t) * res:
                break
            t *= 0.5
        else:
            break  # no descent along the Newton direction: restart elsewhere
        u = cand
        iters += 1
    final = float(res_norm(u))
    if final < best_res:
        best_u, best_res = u, final
    return best_u, best_res, hist, iters


def _best_effort(R, res_norm, y, cod, tgt, cfg):
    rng = np.random.default_rng(cfg.seed)
    scale = max(1.0, float(np.abs(y).max()))
    best = None
    hist_all: list[float] = []
    total = 0
    for k in range(cfg.restarts + 1):
        u0 = y.copy() if k == 0 else y + scale * 0.5 ** (k - 1) * rng.standard_normal(y.size)
        u, res, hist, iters = _newton_run(R, res_norm, y, u0, tgt, cfg, cfg.max_iters)
        hist_all.extend(hist)
        total += iters
        if best is None or res < best[1]:
            best = (u, res)
        if res <= tgt:
            break
    return best[0], hist_all, total


def picard_rate_violations(cert: InversionCertificate, rel: float = 1e-9) -> int:
    """Iterations where the residual failed to shrink by the factor q.

    Each computed residual may differ from the exact one by the certificate's
    rounding allowance d, so the test is ``b <= q a (1 + rel) + (1 + q) d``.
    """
    h = cert.residual_history
    slack = (1.0 + cert.q) * cert.rounding_allowance
    return sum(1 for a, b in zip(h, h[1:]) if b > cert.q * a * (1.0 + rel) + slack)


# ------------------------------------------------------------ inverse handles

def inverse_of(T: MapHandle, profile: PerturbationProfile, cfg: SolverConfig | None = None,
               S: MapHandle | None = None, name: str = "", **kwargs) -> MapHandle:
    """Lazy handle for ``T^-1``; each new input triggers a certified inversion.

    Certificates are cached per input (keyed by the exact bytes of the
    point) and can be read back with :func:`certificates_of`.
    """
    cfg = cfg or SolverConfig()
    cache: dict[bytes, InversionCertificate] = {}
    lock = threading.Lock()

    def solve_one(yrow):
        key = yrow.tobytes()
        cert = cache.get(key)
        if cert is None:
            cert = invert_certified(T, yrow, S, profile, cfg, **kwargs)
            with lock:
                cache.setdefault(key, cert)
        return cert.solution.coords

    def fn(Y):
        return np.stack([solve_one(np.ascontiguousarray(row)) for row in Y])

    return MapHandle(T.codomain, T.domain, "inverse-of", fn=fn,
                     params={"children": [T], "solver": cfg, "profile": profile,
                             "certificates": cache},
                     name=name or f"inv({T.label})", serializable=False)


def certificates_of(handle: MapHandle) -> list[InversionCertificate]:
    return list(handle.params.get("certificates", {}).values())
