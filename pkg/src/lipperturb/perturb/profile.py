"""Admissible perturbation constants estimated from sampled pairs.

Each sampled pair ``(x, y)`` yields three numbers

    s = ||S x - S y||,   t = ||T x - T y||,   r = ||(T x - T y) - (S x - S y)||

and the half-plane ``lambda1 * s + lambda2 * t >= r``.  The intersection of
these half-planes with the positive quadrant is an up-closed convex polygon;
its lower-left boundary (the Pareto frontier) is computed exactly with an
upper-envelope sweep over the constraint lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import InconsistentPairError, NotVerifiableError, StructuralError
from ..maps import MapHandle
from ..spaces import INF, NormDescriptor
from ..sampling import SamplerConfig, pair_indices, sample_points

OBJECTIVES = ("tinv", "t", "sum", "stability", "weights")


@dataclass(frozen=True)
class Objective:
    """What to minimise when picking a point on the frontier.

    ``tinv``      (1 + l2) / (1 - L)          -- the Lip(T^-1) factor (default)
    ``t``         (1 + L) / (1 - l2)          -- the Lip(T) factor
    ``sum``       L + l2
    ``stability`` upper/lower frame-bound ratio
                  (1 + l2)(1 + L) / ((1 - l2)(1 - L))
    ``weights``   w1 * L + w2 * l2

    where ``L = l1 + shift`` (``shift = mu * b`` in the three-constant case).
    Every choice is increasing in both constants.
    """

    name: str = "tinv"
    weights: tuple[float, float] | None = None

    def __post_init__(self):
        if self.name not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.name!r}; expected one of {OBJECTIVES}")
        if self.name == "weights":
            if self.weights is None or len(self.weights) != 2 or min(self.weights) < 0:
                raise ValueError("the weights objective needs two nonnegative weights")

    def __call__(self, l1: float, l2: float, shift: float = 0.0) -> float:
        L = l1 + shift
        if self.name == "tinv":
            return (1.0 + l2) / (1.0 - L)
        if self.name == "t":
            return (1.0 + L) / (1.0 - l2)
        if self.name == "sum":
            return L + l2
        if self.name == "stability":
            return (1.0 + l2) * (1.0 + L) / ((1.0 - l2) * (1.0 - L))
        return self.weights[0] * L + self.weights[1] * l2

    def to_dict(self) -> dict:
        d = {"name": self.name}
        if self.weights is not None:
            d["weights"] = list(self.weights)
        return d


def as_objective(obj) -> Objective:
    if obj is None:
        return Objective()
    if isinstance(obj, Objective):
        return obj
    if isinstance(obj, str):
        return Objective(obj)
    if isinstance(obj, dict):
        w = obj.get("weights")
        return Objective(obj.get("name", "weights" if w else "tinv"), tuple(w) if w else None)
    w1, w2 = obj
    return Objective("weights", (float(w1), float(w2)))


@dataclass(frozen=True)
class PairStats:
    s: np.ndarray
    t: np.ndarray
    r: np.ndarray
    c: np.ndarray  # domain distances, used by the mu-variant

    @property
    def count(self) -> int:
        return int(self.s.size)


def pair_stats(S: MapHandle, T: MapHandle, sampler: SamplerConfig,
               points: np.ndarray | None = None, extremal: bool = True) -> PairStats:
    """Per-pair statistics over the sample.

    With ``extremal`` set and both maps affine on a common unweighted l^p
    space (p in {1, 2, inf}), difference directions that attain the induced
    norms of ``E A_S^-1`` and ``E A_T^-1`` (``E = A_T - A_S``) are appended.
    Those make both ends of the frontier exact rather than sampled.
    """
    if S.domain.dim != T.domain.dim or S.codomain.dim != T.codomain.dim:
        raise StructuralError("S and T must share domain and codomain")
    X = sample_points(S.domain.dim, sampler) if points is None else np.asarray(points, float)
    i, j = pair_indices(X.shape[0], sampler)
    P, Q = X[i], X[j]
    if extremal:
        extra = affine_extremal_directions(S, T)
        if extra is not None:  # affine: a difference direction is a pair (d, 0)
            P = np.vstack([P, extra])
            Q = np.vstack([Q, np.zeros_like(extra)])
    D = P - Q
    dS = S.diff(P, Q)
    dT = T.diff(P, Q)
    cod = S.codomain
    return PairStats(cod.norm_rows(dS), cod.norm_rows(dT), cod.norm_rows(dT - dS),
                     S.domain.norm_rows(D))


def _extremal_input(M: np.ndarray, p) -> np.ndarray:
    """A unit vector u attaining ``||M u|| = ||M||`` in the l^p operator norm."""
    if p is INF:
        return np.where(M[int(np.abs(M).sum(axis=1).argmax())] >= 0, 1.0, -1.0)
    if p == 1.0:
        u = np.zeros(M.shape[1])
        u[int(np.abs(M).sum(axis=0).argmax())] = 1.0
        return u
    return np.linalg.svd(M)[2][0]


def affine_extremal_directions(S: MapHandle, T: MapHandle) -> np.ndarray | None:
    if S.kind != "affine" or T.kind != "affine":
        return None
    nd, nc = S.domain.norm, S.codomain.norm
    if not (isinstance(nd, NormDescriptor) and nd == nc and nd.unweighted):
        return None
    p = nd.p
    if not (p is INF or p in (1.0, 2.0)):
        return None
    A, B = S.matrix, T.matrix
    if A.shape[0] != A.shape[1]:
        return None
    E = B - A
    rows = []
    # exact corners, plus a few blends as a heuristic for interior vertices
    for k in (0.0, None, 0.25, 1.0, 4.0):
        C = B if k is None else A + k * B
        try:
            Cinv = np.linalg.inv(C)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(Cinv)):
            continue
        rows.append(Cinv @ _extremal_input(E @ Cinv, p))
    return np.array(rows) if rows else None


# ------------------------------------------------------------------ frontier

def _upper_envelope(m: np.ndarray, c: np.ndarray) -> list[tuple[float, float]]:
    """Lines ``y = m x + c`` that appear on the upper envelope, left to right."""
    order = np.lexsort((-c, m))
    hull: list[tuple[float, float]] = []
    last_m = None
    for k in order:
        mk, ck = float(m[k]), float(c[k])
        if mk == last_m:
            continue  # same slope, smaller intercept
        last_m = mk
        while len(hull) >= 2:
            (m1, c1), (m2, c2) = hull[-2], hull[-1]
            # hull[-1] is hidden when the new line overtakes hull[-2] no later than hull[-1] does
            if (ck - c1) * (m2 - m1) >= (c2 - c1) * (mk - m1):
                hull.pop()
            else:
                break
        hull.append((mk, ck))
    return hull


def pareto_frontier(s, t, r) -> np.ndarray:
    """Vertices of the lower-left boundary of ``{l >= 0 : l1 s_i + l2 t_i >= r_i}``.

    Returned as a ``(k, 2)`` array with l1 strictly increasing and l2
    strictly decreasing.
    """
    s, t, r = (np.asarray(a, dtype=float).ravel() for a in (s, t, r))
    bad = (s == 0) & (t == 0) & (r > 0)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise InconsistentPairError(
            f"pair {k} has ||dS|| = ||dT|| = 0 but ||dT - dS|| = {r[k]!r} > 0; "
            "this violates the triangle inequality and signals corrupted evaluations")
    act = r > 0
    s, t, r = s[act], t[act], r[act]
    if s.size == 0:
        return np.zeros((1, 2))
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        steep = ~(np.isfinite(s / t) & np.isfinite(r / t))
    # a near-vertical line whose slope overflows is replaced by l1 >= r/s,
    # which lies inside the true half-plane, so every vertex stays feasible
    vert = (t == 0) | (steep & (s > 0))
    hor = (s == 0) & ~vert
    L0 = max(0.0, float(np.max(r[vert] / s[vert]))) if np.any(vert) else 0.0
    H = max(0.0, float(np.max(r[hor] / t[hor]))) if np.any(hor) else 0.0
    gen = ~vert & ~hor
    m = -s[gen] / t[gen]
    c = r[gen] / t[gen]

    def level(x):
        if not m.size:
            return H
        with np.errstate(over="ignore", invalid="ignore"):
            return max(H, float(np.nanmax(c + m * x)))

    hull = _upper_envelope(np.append(m, 0.0), np.append(c, H))
    xs = [L0]
    for (m1, c1), (m2, c2) in zip(hull, hull[1:]):
        x = (c2 - c1) / (m1 - m2)
        if x > L0:
            xs.append(x)
    verts = []
    for x in xs:
        y = level(x)
        if verts and not (x > verts[-1][0] and y < verts[-1][1]):
            continue
        verts.append((x, y))
    return np.array(verts, dtype=float)


def select_on_frontier(frontier: np.ndarray, objective: Objective, shift: float = 0.0,
                       interior_rtol: float = 1e-12) -> tuple[float, float, float] | None:
    """Minimise ``objective`` over the frontier polyline inside the open box.

    Admissibility is ``l1 + shift < 1`` and ``l2 < 1``.  Returns
    ``(l1, l2, value)`` or None when no admissible frontier point exists.
    """
    cap1 = 1.0 - shift
    best = None

    def consider(l1, l2, interior=False):
        nonlocal best
        if not (l1 < cap1 and l2 < 1.0 and l1 >= 0 and l2 >= 0):
            return
        v = objective(l1, l2, shift)
        if not math.isfinite(v):
            return
        if best is None:
            best = (l1, l2, v)
        elif interior:
            if v < best[2] * (1.0 - interior_rtol) - interior_rtol:
                best = (l1, l2, v)
        elif v < best[2]:
            best = (l1, l2, v)

    for l1, l2 in frontier:
        consider(float(l1), float(l2))
    for (a1, a2), (b1, b2) in zip(frontier, frontier[1:]):
        d1, d2 = b1 - a1, b2 - a2
        lo, hi = 0.0, 1.0
        if a1 + hi * d1 >= cap1:
            hi = (cap1 - a1) / d1
        if a2 + lo * d2 >= 1.0:
            lo = (1.0 - a2) / d2
        if not lo < hi:
            continue
        span = hi - lo
        lo_in, hi_in = lo + 1e-9 * span, hi - 1e-9 * span
        for u in (lo_in, hi_in):
            consider(a1 + u * d1, a2 + u * d2, interior=True)
        res = minimize_scalar(lambda u: objective(a1 + u * d1, a2 + u * d2, shift),
                              bounds=(lo_in, hi_in), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, span)})
        consider(a1 + res.x * d1, a2 + res.x * d2, interior=True)
    return best


# ------------------------------------------------------------------- profile

@dataclass(frozen=True)
class PerturbationProfile:
    lambda1: float
    lambda2: float
    mu: float = 0.0
    frontier: tuple[tuple[float, float], ...] = ()
    sample_seed: int | None = None
    lambda2_is_one: bool = False
    objective: str = "tinv"
    objective_value: float | None = None
    pair_count: int = 0
    source: str = "given"
    frame_upper: float | None = None

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or self.mu < 0:
            raise ValueError("perturbation constants must be nonnegative")
        if self.lambda2 > 1.0 or (self.lambda2 == 1.0 and not self.lambda2_is_one):
            raise ValueError("lambda2 must lie in [0, 1), or equal 1 with lambda2_is_one set")

    def effective_lambda1(self, b: float | None = None) -> float:
        """``lambda1 + mu * b``, the constant that enters the reduced inequality."""
        if self.mu == 0.0:
            return self.lambda1
        b = self.frame_upper if b is None else b
        if b is None:
            raise ValueError("mu > 0 needs an upper frame bound b")
        return self.lambda1 + self.mu * b

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "lambda2": self.lambda2, "mu": self.mu,
                "frontier": [list(v) for v in self.frontier], "sample_seed": self.sample_seed,
                "lambda2_is_one": self.lambda2_is_one, "objective": self.objective,
                "objective_value": self.objective_value, "pair_count": self.pair_count,
                "source": self.source, "frame_upper": self.frame_upper}

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbationProfile":
        d = dict(d)
        d["frontier"] = tuple(tuple(v) for v in d.get("frontier", ()))
        return cls(**d)


def given_profile(lambda1: float, lambda2: float, mu: float = 0.0,
                  frame_upper: float | None = None) -> PerturbationProfile:
    """A profile from hand-derived (globally valid) constants."""
    return PerturbationProfile(float(lambda1), float(lambda2), float(mu),
                               frontier=((float(lambda1), float(lambda2)),),
                               lambda2_is_one=(lambda2 == 1.0), source="given",
                               frame_upper=frame_upper)


def _profile_from_stats(st: PairStats, objective: Objective, mu: float, b: float,
                        seed) -> PerturbationProfile:
    r = np.maximum(st.r - mu * st.c, 0.0) if mu else st.r
    F = pareto_frontier(st.s, st.t, r)
    pick = select_on_frontier(F, objective, shift=mu * b)
    if pick is None:
        raise NotVerifiableError(
            f"no frontier point satisfies lambda1{' + mu*b' if mu else ''} < 1 and lambda2 < 1 "
            f"(mu = {mu}); frontier vertices: {F.tolist()}")
    l1, l2, v = pick
    return PerturbationProfile(l1, l2, mu, tuple(map(tuple, F.tolist())), seed,
                               objective=objective.name, objective_value=v,
                               pair_count=st.count, source="estimated",
                               frame_upper=b if mu else None)


def estimate_profile(S: MapHandle, T: MapHandle, sampler: SamplerConfig, objective=None,
                     points: np.ndarray | None = None) -> PerturbationProfile:
    """Smallest (by ``objective``) constants with
    ``||dT - dS|| <= lambda1 ||dS|| + lambda2 ||dT||`` on every sampled pair."""
    st = pair_stats(S, T, sampler, points)
    return _profile_from_stats(st, as_objective(objective), 0.0, 0.0, sampler.seed)


def estimate_profile_mu(S: MapHandle, T: MapHandle, sampler: SamplerConfig, mu_grid,
                        objective="stability", frame_upper: float = 1.0,
                        points: np.ndarray | None = None) -> PerturbationProfile:
    """Three-constant variant over a sequence space.

    For each ``mu`` the constraints become ``l1 s + l2 t >= r - mu c`` with
    ``c`` the coefficient distance.  The best triple across the grid wins;
    admissibility is ``max(l2, l1 + mu b) < 1``.
    """
    mu_grid = [float(m) for m in mu_grid]
    if not mu_grid or min(mu_grid) < 0:
        raise ValueError("mu_grid must be a nonempty list of nonnegative numbers")
    obj = as_objective(objective)
    st = pair_stats(S, T, sampler, points)
    best = None
    failures = []
    for mu in mu_grid:
        try:
            prof = _profile_from_stats(st, obj, mu, frame_upper, sampler.seed)
        except NotVerifiableError as exc:
            failures.append(str(exc))
            continue
        if best is None or prof.objective_value < best.objective_value:
            best = prof
    if best is None:
        raise NotVerifiableError("no mu in the grid admits constants: " + "; ".join(failures))
    return best


@dataclass(frozen=True)
class ProfileCheck:
    max_violation: float
    pair_count: int
    passed: bool

    def to_dict(self) -> dict:
        return {"max_violation": self.max_violation, "pair_count": self.pair_count,
                "passed": self.passed}


def check_profile(S: MapHandle, T: MapHandle, profile: PerturbationProfile,
                  sampler: SamplerConfig, points: np.ndarray | None = None,
                  tol: float = 1e-12) -> ProfileCheck:
    """Largest violation of the three-constant inequality over the sample."""
    st = pair_stats(S, T, sampler, points)
    return check_stats(st, profile.lambda1, profile.lambda2, profile.mu, tol)


def check_stats(st: PairStats, l1: float, l2: float, mu: float = 0.0,
                tol: float = 1e-12) -> ProfileCheck:
    excess = st.r - (l1 * st.s + l2 * st.t + mu * st.c)
    scaled = excess / np.maximum(1.0, st.r)
    worst = float(scaled.max()) if scaled.size else 0.0
    return ProfileCheck(worst, st.count, worst <= tol)
