"""Grid probe of the guaranteed resolvent half-line ``alpha < (1-l1)/(1+l2)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..maps import MapHandle, combination
from ..sampling import SamplerConfig, sample_points
from ..maps import difference_quotients
from .profile import PerturbationProfile

SINGULAR_RTOL = 1e-8


@dataclass(frozen=True)
class ScanEntry:
    alpha: float
    guaranteed: bool
    sample_bilip_lower: float
    exact_min_singular: float | None = None
    exact_max_singular: float | None = None
    exact_invertible: bool | None = None

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "guaranteed": self.guaranteed,
                "sample_bilip_lower": self.sample_bilip_lower,
                "exact_min_singular": self.exact_min_singular,
                "exact_max_singular": self.exact_max_singular,
                "exact_invertible": self.exact_invertible}


@dataclass(frozen=True)
class ScanReport:
    threshold: float
    entries: tuple[ScanEntry, ...]
    affine: bool
    violations: tuple[float, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "affine": self.affine,
                "violations": list(self.violations), "passed": self.passed,
                "entries": [e.to_dict() for e in self.entries]}


def exact_invertibility(M: np.ndarray, rtol: float = SINGULAR_RTOL) -> tuple[float, float, bool]:
    """(smallest, largest singular value, invertible?) with a relative rank test."""
    sv = np.linalg.svd(M, compute_uv=False)
    smin, smax = float(sv.min()), float(sv.max())
    return smin, smax, bool(smax > 0 and smin > rtol * smax)


def resolvent_scan(S: MapHandle, T: MapHandle, profile: PerturbationProfile, alpha_grid,
                   sampler: SamplerConfig, points: np.ndarray | None = None) -> ScanReport:
    """For each alpha: sampled lower bi-Lipschitz ratio of ``alpha S - T`` and,
    for affine pairs, an exact singularity check.  Any alpha inside the
    guaranteed interval whose exact check fails is listed in ``violations``.
    """
    l1 = profile.effective_lambda1()
    threshold = (1.0 - l1) / (1.0 + profile.lambda2)
    X = sample_points(S.domain.dim, sampler) if points is None else np.asarray(points, float)
    is_affine = S.kind == "affine" and T.kind == "affine" and S.matrix.shape[0] == S.matrix.shape[1]
    entries = []
    violations = []
    for a in (float(v) for v in alpha_grid):
        M = combination([(a, S), (-1.0, T)])
        q = difference_quotients(M, X, sampler)
        guaranteed = a < threshold
        smin = smax = inv = None
        if is_affine:
            smin, smax, inv = exact_invertibility(a * S.matrix - T.matrix)
            if guaranteed and not inv:
                violations.append(a)
        entries.append(ScanEntry(a, guaranteed, float(q.min()), smin, smax, inv))
    return ScanReport(threshold, tuple(entries), is_affine, tuple(violations))
