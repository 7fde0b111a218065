"""Closed-form invertibility and Lipschitz bounds.

All calculators reject constants on or beyond the boundary of their open
validity range with :class:`DomainError` instead of returning infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class BoundReport:
    """Two-sided bounds on Lip(T) and Lip(T^-1), plus the resolvent threshold.

    ``alpha * S - T`` is guaranteed invertible for every
    ``alpha < invertibility_threshold``.
    """

    lip_T_lower: float
    lip_T_upper: float
    lip_Tinv_lower: float
    lip_Tinv_upper: float
    invertibility_threshold: float
    formula_id: str
    inputs: dict = field(default_factory=dict)

    def values(self) -> tuple[float, float, float, float, float]:
        return (self.lip_T_lower, self.lip_T_upper, self.lip_Tinv_lower,
                self.lip_Tinv_upper, self.invertibility_threshold)

    def to_dict(self) -> dict:
        return {"formula_id": self.formula_id, "lip_T_lower": self.lip_T_lower,
                "lip_T_upper": self.lip_T_upper, "lip_Tinv_lower": self.lip_Tinv_lower,
                "lip_Tinv_upper": self.lip_Tinv_upper,
                "invertibility_threshold": self.invertibility_threshold,
                "inputs": dict(self.inputs)}


def _finite(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise DomainError(f"{what} overflowed to {x}", parameter=what)
    return x


def _check_unit(name: str, value: float, *, closed_top: bool = False) -> None:
    if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value)):
        raise DomainError(f"{name} must be a finite real, got {value!r}", parameter=name)
    top_ok = value <= 1.0 if closed_top else value < 1.0
    if value < 0.0 or not top_ok:
        rng = "[0, 1]" if closed_top else "[0, 1)"
        raise DomainError(f"{name} = {value!r} is outside {rng}", parameter=name)


def _check_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}", parameter=name)


def bounds_main(lambda1: float, lambda2: float, lip_s: float = 1.0, lip_sinv: float = 1.0,
                formula_id: str = "perturbation-main") -> BoundReport:
    """Bounds implied by ``||dT - dS|| <= lambda1 ||dS|| + lambda2 ||dT||``.

    Lip(T)    in [(1-l1)/(1+l2) Lip(S),        (1+l1)/(1-l2) Lip(S)]
    Lip(T^-1) in [(1-l2)/(1+l1) / Lip(S),      (1+l2)/(1-l1) Lip(S^-1)]
    and ``alpha S - T`` is invertible for ``alpha < (1-l1)/(1+l2)``.
    """
    _check_unit("lambda1", lambda1)
    _check_unit("lambda2", lambda2)
    _check_positive("lip_s", lip_s)
    _check_positive("lip_sinv", lip_sinv)
    l1, l2 = float(lambda1), float(lambda2)
    return BoundReport(
        lip_T_lower=_finite((1.0 - l1) / (1.0 + l2) * lip_s, "lip_T_lower"),
        lip_T_upper=_finite((1.0 + l1) / (1.0 - l2) * lip_s, "lip_T_upper"),
        lip_Tinv_lower=_finite((1.0 - l2) / (1.0 + l1) / lip_s, "lip_Tinv_lower"),
        lip_Tinv_upper=_finite((1.0 + l2) / (1.0 - l1) * lip_sinv, "lip_Tinv_upper"),
        invertibility_threshold=(1.0 - l1) / (1.0 + l2),
        formula_id=formula_id,
        inputs={"lambda1": l1, "lambda2": l2, "lip_s": float(lip_s), "lip_sinv": float(lip_sinv)},
    )


def bounds_hilding(lam: float) -> BoundReport:
    """Symmetric case ``lambda1 = lambda2 = lam`` with S the identity."""
    _check_unit("lambda", lam)
    lo = (1.0 - lam) / (1.0 + lam)
    hi = _finite((1.0 + lam) / (1.0 - lam), "upper bound")
    return BoundReport(lo, hi, lo, hi, lo, "hilding", {"lambda": float(lam)})


def bounds_guo(lambda1: float, lambda2: float, eps: float, lip_tsinv: float,
               lip_s: float = 1.0, lip_sinv: float = 1.0) -> BoundReport:
    """epsilon-refined bounds allowing ``lambda2 = 1``.

    Evaluates :func:`bounds_main` at ``(lambda1 + eps Lip(T S^-1), lambda2 - eps)``.
    """
    _check_unit("lambda1", lambda1)
    _check_unit("lambda2", lambda2, closed_top=True)
    _check_positive("lip_tsinv", lip_tsinv)
    if not (math.isfinite(eps) and eps > 0):
        raise DomainError(f"eps must be positive, got {eps!r}", parameter="eps")
    l2_eff = lambda2 - eps
    if not (0.0 < l2_eff < 1.0):
        raise DomainError(
            f"eps = {eps!r} violates 1 > lambda2 - eps > 0 (lambda2 - eps = {l2_eff!r})",
            parameter="eps")
    l1_eff = lambda1 + eps * lip_tsinv
    if not l1_eff < 1.0:
        raise DomainError(
            f"eps = {eps!r} violates lambda1 + eps*Lip(TS^-1) < 1 (value {l1_eff!r})",
            parameter="eps")
    rep = bounds_main(l1_eff, l2_eff, lip_s, lip_sinv, formula_id="guo-epsilon")
    inputs = dict(rep.inputs, lambda1=float(lambda1), lambda2=float(lambda2), eps=float(eps),
                  lip_tsinv=float(lip_tsinv), effective_lambda1=l1_eff, effective_lambda2=l2_eff)
    return BoundReport(*rep.values(), formula_id="guo-epsilon", inputs=inputs)


@dataclass(frozen=True)
class GuoSweep:
    best: BoundReport | None
    eps: np.ndarray
    lip_Tinv_upper: np.ndarray  # nan where eps is inadmissible

    def to_dict(self) -> dict:
        return {"best": None if self.best is None else self.best.to_dict(),
                "eps": self.eps.tolist(),
                "lip_Tinv_upper": [None if not math.isfinite(v) else v
                                   for v in self.lip_Tinv_upper.tolist()]}


def guo_epsilon_sweep(lambda1: float, lambda2: float, lip_tsinv: float, eps_grid,
                      lip_s: float = 1.0, lip_sinv: float = 1.0) -> GuoSweep:
    """Tightest ``lip_Tinv_upper`` over an eps grid (grid argmin; no monotonicity assumed)."""
    eps = np.asarray(list(eps_grid), dtype=float)
    vals = np.full(eps.shape, np.nan)
    best = None
    for k, e in enumerate(eps):
        try:
            rep = bounds_guo(lambda1, lambda2, float(e), lip_tsinv, lip_s, lip_sinv)
        except DomainError:
            continue
        vals[k] = rep.lip_Tinv_upper
        if best is None or rep.lip_Tinv_upper < best.lip_Tinv_upper:
            best = rep
    return GuoSweep(best, eps, vals)


def p_cap(p: float) -> float:
    """Upper limit (exclusive) on the constants of the p-combined inequality."""
    return 1.0 if p >= 1.0 else 2.0 ** (1.0 - 1.0 / p)


def reduce_p_combined(lambda1: float, lambda2: float, p: float) -> tuple[float, float]:
    """Reduce ``||dT - dS|| <= ((l1 ||dS||)^p + (l2 ||dT||)^p)^(1/p)`` to the linear form.

    For p >= 1 the constants are unchanged; for 0 < p < 1 they scale by
    ``2^(1/p - 1)``.
    """
    if not (math.isfinite(p) and p > 0):
        raise DomainError(f"p must be positive, got {p!r}", parameter="p")
    cap = p_cap(p)
    for name, v in (("lambda1", lambda1), ("lambda2", lambda2)):
        if not (0.0 <= v < cap):
            raise DomainError(f"{name} = {v!r} is outside [0, {cap!r}) for p = {p!r}",
                              parameter=name)
    if p >= 1.0:
        return float(lambda1), float(lambda2)
    k = 2.0 ** (1.0 / p - 1.0)
    return min(k * lambda1, math.nextafter(1.0, 0.0)), min(k * lambda2, math.nextafter(1.0, 0.0))


def bounds_p_combined(lambda1: float, lambda2: float, p: float, lip_s: float = 1.0,
                      lip_sinv: float = 1.0) -> BoundReport:
    l1, l2 = reduce_p_combined(lambda1, lambda2, p)
    rep = bounds_main(l1, l2, lip_s, lip_sinv)
    fid = "p-combined-ge1" if p >= 1 else "p-combined-lt1"
    return BoundReport(*rep.values(), formula_id=fid,
                       inputs=dict(rep.inputs, p=float(p), lambda1_raw=float(lambda1),
                                   lambda2_raw=float(lambda2)))


def bounds_lambda2_one(lam: float, lip_sinv: float) -> float:
    """Upper bound ``2 Lip(S^-1) / (1 - lam)`` on Lip(T^-1) when lambda2 = 1."""
    _check_unit("lambda", lam)
    _check_positive("lip_sinv", lip_sinv)
    return _finite(2.0 * lip_sinv / (1.0 - lam), "Lip(T^-1) upper bound")


def bounds_soderlind(alpha: float, beta: float) -> float:
    """Lip(A^-1) <= alpha / (1 - beta) when ``||alpha dA - dx|| <= beta ||dx||``."""
    _check_positive("alpha", alpha)
    _check_unit("beta", beta)
    return _finite(alpha / (1.0 - beta), "Lip(A^-1) upper bound")


def bounds_barbagallo(alpha: float, beta: float, hilbert: bool = False) -> float:
    """Lip(A^-1) bound when ``||dA - alpha dx|| <= beta ||dA||``.

    General Banach case needs beta < 1/2 and gives (1-beta)/(alpha(1-2 beta));
    the Hilbert case gives (1+beta)/alpha.
    """
    _check_positive("alpha", alpha)
    _check_unit("beta", beta)
    if hilbert:
        return (1.0 + beta) / alpha
    if not beta < 0.5:
        raise DomainError(
            f"beta = {beta!r} >= 1/2: the non-Hilbert case (i) requires beta < 1/2",
            parameter="beta")
    return _finite((1.0 - beta) / (alpha * (1.0 - 2.0 * beta)), "Lip(A^-1) upper bound")


def q_contraction_rate(lambda1: float, lambda2: float) -> float:
    """Lipschitz constant ``(l1 + l2)/(1 - l2)`` of ``I - R`` for the reduced map R."""
    if not (math.isfinite(lambda2) and lambda2 < 1.0):
        raise DomainError(f"lambda2 = {lambda2!r} must be < 1", parameter="lambda2")
    if lambda1 < 0 or lambda2 < 0:
        raise DomainError("constants must be nonnegative",
                          parameter="lambda1" if lambda1 < 0 else "lambda2")
    return (lambda1 + lambda2) / (1.0 - lambda2)
