"""Metric frames on finite-dimensional normed spaces.

A metric frame is a family of Lipschitz functionals ``f_n`` together with a
Lipschitz synthesis map ``S`` on the coefficient space such that the analysis
map ``theta_f(x) = (f_n(x))_n`` is bi-Lipschitz with bounds ``(a, b)`` and
``S(theta_f(x)) = x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateSampleError, DomainError, PreconditionError, StructuralError,
                     UnsupportedConfigurationError)
from .maps import MapHandle, affine, composite, identity, map_from_dict, map_to_dict, stack
from .perturb.inversion import SolverConfig, inverse_of
from .perturb.profile import PairStats, PerturbationProfile, check_stats, given_profile, pair_stats
from .sampling import SamplerConfig, pair_indices, sample_points
from .spaces import NormedSpace, Vector


@dataclass(frozen=True, eq=False)
class MetricFrame:
    functionals: tuple[MapHandle, ...]
    seq_space: NormedSpace
    synthesis: MapHandle
    claimed_bounds: tuple[float, float]
    analysis_handle: MapHandle | None = None  # optional fast path, must agree with functionals
    name: str = ""

    def __post_init__(self):
        fs = tuple(self.functionals)
        object.__setattr__(self, "functionals", fs)
        if not fs:
            raise StructuralError("a frame needs at least one functional")
        if self.seq_space.dim < len(fs):
            raise StructuralError(
                f"{len(fs)} functionals do not fit into a sequence space of dimension "
                f"{self.seq_space.dim}")
        if self.synthesis.domain.dim != self.seq_space.dim:
            raise StructuralError("synthesis map must be defined on the sequence space")
        if self.synthesis.codomain.dim != fs[0].domain.dim:
            raise StructuralError("synthesis map must land in the frame's base space")
        a, b = (float(v) for v in self.claimed_bounds)
        if not (0 < a <= b):
            raise ValueError(f"claimed bounds must satisfy 0 < a <= b, got ({a}, {b})")
        object.__setattr__(self, "claimed_bounds", (a, b))
        if self.analysis_handle is None:
            object.__setattr__(self, "analysis_handle", stack(fs, self.seq_space))

    @property
    def space(self) -> NormedSpace:
        return self.functionals[0].domain

    @property
    def size(self) -> int:
        return len(self.functionals)

    @property
    def theta(self) -> MapHandle:
        return self.analysis_handle

    def to_dict(self) -> dict:
        return {"functionals": [map_to_dict(f) for f in self.functionals],
                "seq_space": self.seq_space.to_dict(),
                "synthesis": map_to_dict(self.synthesis),
                "claimed_bounds": list(self.claimed_bounds), "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricFrame":
        seq = NormedSpace.from_dict(d["seq_space"])
        fs = [map_from_dict(f) for f in d["functionals"]]
        return cls(tuple(fs), seq, map_from_dict(d["synthesis"]),
                   tuple(d["claimed_bounds"]), name=d.get("name", ""))


@dataclass(frozen=True)
class FrameBoundEstimate:
    a_emp: float
    b_emp: float
    reconstruction_max_error: float
    pair_count: int

    def within(self, bounds: tuple[float, float], tol: float = 1e-9) -> bool:
        a, b = bounds
        return self.a_emp >= a - tol * max(1.0, a) and self.b_emp <= b + tol * max(1.0, b)

    def to_dict(self) -> dict:
        return {"a_emp": self.a_emp, "b_emp": self.b_emp,
                "reconstruction_max_error": self.reconstruction_max_error,
                "pair_count": self.pair_count}


def analysis(frame: MetricFrame, x) -> Vector:
    """``theta_f(x)`` as a vector of the sequence space."""
    xc = x.coords if isinstance(x, Vector) else np.asarray(x, dtype=float).reshape(-1)
    if xc.size != frame.space.dim:
        raise StructuralError(f"point of dimension {xc.size} is not in R^{frame.space.dim}")
    return Vector(frame.seq_space, frame.theta(xc))


def frame_bounds_estimate(frame: MetricFrame, sampler: SamplerConfig,
                          points: np.ndarray | None = None) -> FrameBoundEstimate:
    X = sample_points(frame.space.dim, sampler) if points is None else np.asarray(points, float)
    i, j = pair_indices(X.shape[0], sampler)
    d = frame.space.norm_rows(X[i] - X[j])
    keep = d > 0
    if not np.any(keep):
        raise DegenerateSampleError("all sampled points coincide")
    C = frame.theta(X)
    ratios = frame.seq_space.norm_rows(C[i[keep]] - C[j[keep]]) / d[keep]
    rec = frame.space.norm_rows(frame.synthesis(C) - X)
    return FrameBoundEstimate(float(ratios.min()), float(ratios.max()), float(rec.max()),
                              int(ratios.size))


# ------------------------------------------------------------- perturbation

def _concat(a: PairStats, b: PairStats) -> PairStats:
    return PairStats(*(np.concatenate([getattr(a, k), getattr(b, k)]) for k in "strc"))


def three_constant_stats(S: MapHandle, T: MapHandle, theta: MapHandle,
                         sampler: SamplerConfig) -> PairStats:
    """Pair statistics for the three-constant inequality on the coefficient space.

    Pairs come from two sources: random coefficient sequences, and the
    analysis images ``theta(x)`` of random points of the base space (the
    pairs that the stability argument actually uses).
    """
    st = pair_stats(S, T, sampler)
    X = sample_points(theta.domain.dim, sampler.with_seed(sampler.seed + 1))
    return _concat(st, pair_stats(S, T, sampler, points=theta(X)))


def stability_bounds(a: float, b: float, lambda1: float, lambda2: float,
                     mu: float) -> tuple[float, float]:
    """Frame bounds of the perturbed system, after checking ``max{l2, l1 + mu b} < 1``."""
    eff = lambda1 + mu * b
    if not lambda2 < 1.0:
        raise DomainError(f"lambda2 = {lambda2!r} must be < 1", parameter="lambda2")
    if not eff < 1.0:
        raise DomainError(f"lambda1 + mu*b = {eff!r} must be < 1", parameter="lambda1")
    return a * (1.0 - lambda2) / (1.0 + eff), b * (1.0 + lambda2) / (1.0 - eff)


def perturb_frame(frame: MetricFrame, T: MapHandle, profile: PerturbationProfile,
                  sampler: SamplerConfig, cfg: SolverConfig | None = None,
                  reconstruction_tol: float = 1e-7, name: str = "") -> MetricFrame:
    """The frame ``(g_n, T)`` with ``g_n = f_n o (T theta_f)^-1``.

    The constants are first checked against the sample; the call refuses
    to run if any sampled pair violates them.  ``(T theta_f)^-1`` is a lazy
    certified inverse computed against the identity with constants
    ``(lambda1 + mu b, lambda2)``.
    """
    if T.domain.dim != frame.seq_space.dim or T.codomain.dim != frame.space.dim:
        raise StructuralError("T must map the sequence space into the frame's base space")
    a, b = frame.claimed_bounds
    l1, l2, mu = profile.lambda1, profile.lambda2, profile.mu
    lo, hi = stability_bounds(a, b, l1, l2, mu)
    check = check_stats(three_constant_stats(frame.synthesis, T, frame.theta, sampler),
                        l1, l2, mu)
    if not check.passed:
        raise PreconditionError(
            f"constants (lambda1={l1}, lambda2={l2}, mu={mu}) fail on the sample: "
            f"worst scaled violation {check.max_violation:.3e} over {check.pair_count} pairs")
    T_theta = composite([frame.theta, T], name="T.theta_f")
    inv = inverse_of(T_theta, given_profile(l1 + mu * b, l2), cfg, S=identity(frame.space),
                     name="inv(T.theta_f)")
    gs = tuple(composite([inv, f], name=f"g{k}") for k, f in enumerate(frame.functionals))
    out = MetricFrame(gs, frame.seq_space, T, (lo, hi),
                      analysis_handle=composite([inv, frame.theta]), name=name)
    X = sample_points(frame.space.dim, sampler)
    err = frame.space.norm_rows(T(out.theta(X)) - X)
    scale = np.maximum(1.0, frame.space.norm_rows(X))
    if np.any(err > reconstruction_tol * scale):
        raise PreconditionError(
            f"perturbed frame fails to reconstruct: max error {float(err.max()):.3e}")
    return out


# --------------------------------------------------- frames <-> decompositions

def frame_from_atomic(dec, unit_vector_basis: bool = True) -> MetricFrame:
    """Frame ``(f_n, S)`` with linear synthesis ``S(a) = sum a_n tau_n``."""
    if not unit_vector_basis:
        raise UnsupportedConfigurationError(
            "the frame/decomposition correspondence needs the unit vectors to form a "
            "basis of the sequence space")
    G = np.zeros((dec.space.dim, dec.seq_space.dim))
    G[:, :dec.size] = dec.atoms.T
    S = affine(G, None, dec.seq_space, dec.space, name="synthesis")
    return MetricFrame(dec.functionals, dec.seq_space, S, dec.claimed_bounds,
                       analysis_handle=dec.theta, name=dec.name)


def atomic_from_frame(frame: MetricFrame):
    """Decomposition ``(f_n, S e_n)``; requires a linear synthesis map."""
    from .atomic import AtomicDecomposition
    S = frame.synthesis
    if not S.is_linear:
        raise UnsupportedConfigurationError(
            f"atomic_from_frame needs a linear synthesis map, got kind {S.kind!r}"
            + (" with nonzero offset" if S.is_affine else ""))
    atoms = S.matrix[:, :frame.size].T.copy()
    return AtomicDecomposition(frame.functionals, atoms, frame.seq_space, frame.claimed_bounds,
                               analysis_handle=frame.theta, name=frame.name)
