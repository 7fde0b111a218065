"""Lipschitz atomic decompositions: checks, lifting, dilation, perturbation.

A decomposition ``(f_n, tau_n)`` reconstructs every point as
``x = sum_n f_n(x) tau_n`` and its coefficient map is bi-Lipschitz with
bounds ``(a, b)``.  With finitely many atoms every series is a finite sum,
so convergence conditions hold trivially; reports say so explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateNormError, PreconditionError, StructuralError,
                     UnsupportedConfigurationError)
from .frames import stability_bounds, three_constant_stats
from .maps import (MapHandle, affine, composite, custom, family_constants, identity,
                   map_from_dict, map_to_dict, operator_norm, stack)
from .perturb.inversion import SolverConfig, inverse_of
from .perturb.profile import PerturbationProfile, check_stats, given_profile
from .sampling import SamplerConfig, pair_indices, sample_points
from .spaces import DirectSumNorm, INF, NormDescriptor, NormedSpace, PartialSumNorm, lp

PIVOT_RTOL = 1e-10
FINITE_SUM_NOTE = "finitely many atoms: every series is a finite sum and converges"


@dataclass(frozen=True, eq=False)
class AtomicDecomposition:
    functionals: tuple[MapHandle, ...]
    atoms: np.ndarray  # (N, dim)
    seq_space: NormedSpace
    claimed_bounds: tuple[float, float]
    analysis_handle: MapHandle | None = None
    name: str = ""

    def __post_init__(self):
        fs = tuple(self.functionals)
        object.__setattr__(self, "functionals", fs)
        atoms = np.array(self.atoms, dtype=float, copy=True)
        if atoms.ndim != 2 or atoms.shape[0] != len(fs):
            raise StructuralError(f"need one atom per functional: {len(fs)} functionals, "
                                  f"atoms of shape {atoms.shape}")
        if not fs:
            raise StructuralError("a decomposition needs at least one atom")
        if atoms.shape[1] != fs[0].domain.dim:
            raise StructuralError("atoms must live in the functionals' domain")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms must be finite")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        if self.seq_space.dim < len(fs):
            raise StructuralError("sequence space is smaller than the number of atoms")
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

    def coefficients(self, X) -> np.ndarray:
        return self.theta(X)[..., :self.size]

    def reconstruct(self, X) -> np.ndarray:
        return self.coefficients(X) @ self.atoms

    def synthesis(self, atoms: np.ndarray | None = None) -> MapHandle:
        """The linear map ``a -> sum a_n atom_n`` on the sequence space."""
        atoms = self.atoms if atoms is None else atoms
        G = np.zeros((self.space.dim, self.seq_space.dim))
        G[:, :self.size] = atoms.T
        return affine(G, None, self.seq_space, self.space, name="synthesis")

    def to_dict(self) -> dict:
        return {"functionals": [map_to_dict(f) for f in self.functionals],
                "atoms": self.atoms.tolist(), "seq_space": self.seq_space.to_dict(),
                "claimed_bounds": list(self.claimed_bounds), "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "AtomicDecomposition":
        return cls(tuple(map_from_dict(f) for f in d["functionals"]), np.asarray(d["atoms"]),
                   NormedSpace.from_dict(d["seq_space"]), tuple(d["claimed_bounds"]),
                   name=d.get("name", ""))


# ------------------------------------------------------------------ checks

@dataclass(frozen=True)
class ValidationReport:
    coefficient_norm_max: float
    a_emp: float
    b_emp: float
    reconstruction_max_error: float
    bounds_ok: bool
    reconstruction_ok: bool
    tolerance: float
    pair_count: int
    convergence: str = FINITE_SUM_NOTE

    @property
    def passed(self) -> bool:
        return self.bounds_ok and self.reconstruction_ok

    def to_dict(self) -> dict:
        return {"coefficient_norm_max": self.coefficient_norm_max, "a_emp": self.a_emp,
                "b_emp": self.b_emp, "reconstruction_max_error": self.reconstruction_max_error,
                "bounds_ok": self.bounds_ok, "reconstruction_ok": self.reconstruction_ok,
                "tolerance": self.tolerance, "pair_count": self.pair_count,
                "convergence": self.convergence, "passed": self.passed}


def check_decomposition(dec: AtomicDecomposition, sampler: SamplerConfig,
                        tolerance: float = 1e-9,
                        points: np.ndarray | None = None) -> ValidationReport:
    """Coefficient norms, empirical bounds against the claimed ones, and
    reconstruction error, all on a sample.  Tolerances are relative to
    ``max(1, |value|)``."""
    X = sample_points(dec.space.dim, sampler) if points is None else np.asarray(points, float)
    C = dec.theta(X)
    i, j = pair_indices(X.shape[0], sampler)
    d = dec.space.norm_rows(X[i] - X[j])
    keep = d > 0
    ratios = dec.seq_space.norm_rows(C[i[keep]] - C[j[keep]]) / d[keep]
    a_emp = float(ratios.min()) if ratios.size else float("nan")
    b_emp = float(ratios.max()) if ratios.size else float("nan")
    a, b = dec.claimed_bounds
    bounds_ok = bool(ratios.size) and a_emp >= a - tolerance * max(1.0, a) \
        and b_emp <= b + tolerance * max(1.0, b)
    err = dec.space.norm_rows(C[:, :dec.size] @ dec.atoms - X)
    scale = np.maximum(1.0, dec.space.norm_rows(X))
    return ValidationReport(float(dec.seq_space.norm_rows(C).max()), a_emp, b_emp,
                            float(err.max()), bool(bounds_ok),
                            bool(np.all(err <= tolerance * scale)), tolerance, int(ratios.size))


# ------------------------------------------------------------------ lifting

def graph_embedding(T: MapHandle, bilip: tuple[float, float] | None = None,
                    ) -> tuple[MapHandle, MapHandle, tuple[float, float]]:
    """``A: x -> (x, T x)`` into the l^p sum of two copies, the projection
    ``B: (x, y) -> x`` and the bi-Lipschitz constants of A.

    The constants of A follow from those of T: ``(1 + lo^p)^(1/p)`` and
    ``(1 + hi^p)^(1/p)`` (max for p = inf).
    """
    X = T.domain
    if T.codomain.dim != X.dim or not isinstance(X.norm, NormDescriptor) or not X.norm.unweighted:
        raise UnsupportedConfigurationError("graph embedding needs T on an unweighted l^p space")
    p = X.norm.p
    if bilip is None:
        if T.kind == "componentwise":
            bilip = family_constants(T.params["family"], T.params)
        else:
            raise UnsupportedConfigurationError("pass the bi-Lipschitz constants of T")
    lo, hi = bilip
    if p is INF:
        cA = (max(1.0, lo), max(1.0, hi))
    else:
        cA = ((1.0 + lo ** p) ** (1.0 / p), (1.0 + hi ** p) ** (1.0 / p))
    Y = lp(2 * X.dim, p)
    A = custom(lambda V: np.hstack([V, T(V)]), X, Y, name="graph")
    B = affine(np.hstack([np.eye(X.dim), np.zeros((X.dim, X.dim))]), None, Y, X, name="proj1")
    return A, B, cA


def lift_decomposition(dec: AtomicDecomposition, A: MapHandle, B: MapHandle,
                       A_bilip: tuple[float, float], sampler: SamplerConfig,
                       tol: float = 1e-10) -> AtomicDecomposition:
    """Decomposition on the domain of A with ``f_n = g_n o A`` and ``tau_n = B omega_n``.

    ``B`` must be linear with ``B A = I``; ``A_bilip`` are the lower and
    upper bi-Lipschitz constants of A, which scale the bounds.
    """
    if A.codomain.dim != dec.space.dim or B.domain.dim != dec.space.dim:
        raise StructuralError("A must map into, and B out of, the decomposition's space")
    if B.codomain.dim != A.domain.dim:
        raise StructuralError("B must map back into the domain of A")
    if not B.is_linear:
        raise PreconditionError(f"B must be linear (affine with zero offset), got kind {B.kind}")
    X = sample_points(A.domain.dim, sampler)
    err = A.domain.norm_rows(B(A(X)) - X)
    scale = np.maximum(1.0, A.domain.norm_rows(X))
    if np.any(err > tol * scale):
        raise PreconditionError(f"B is not a left inverse of A: max |BAx - x| = {err.max():.3e}")
    lo, hi = A_bilip
    if not (0 < lo <= hi):
        raise ValueError("bi-Lipschitz constants of A must satisfy 0 < lo <= hi")
    fs = tuple(composite([A, g]) for g in dec.functionals)
    atoms = B(dec.atoms)
    a, b = dec.claimed_bounds
    return AtomicDecomposition(fs, atoms, dec.seq_space, (a * lo, b * hi),
                               analysis_handle=composite([A, dec.theta]), name=dec.name)


def basis_decomposition(W: np.ndarray, space: NormedSpace,
                        seq_space: NormedSpace | None = None) -> AtomicDecomposition:
    """Atoms = columns of the invertible matrix W, functionals = rows of W^-1.

    Bounds are exact when both spaces are unweighted l^p with the same
    p in {1, 2, inf}: ``a = 1/||W||`` and ``b = ||W^-1||``.
    """
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    if W.shape != (n, n) or space.dim != n:
        raise StructuralError("W must be square and match the space")
    seq = seq_space or NormedSpace(n, space.norm)
    Winv = np.linalg.inv(W)
    p = space.norm.p
    a, b = 1.0 / operator_norm(W, p), operator_norm(Winv, p)
    theta = affine(np.vstack([Winv, np.zeros((seq.dim - n, n))]), None, space, seq)
    fs = tuple(affine(Winv[k:k + 1], None, space, lp(1)) for k in range(n))
    return AtomicDecomposition(fs, W.T, seq, (a, b), analysis_handle=theta)


# --------------------------------------------------------------- Schauder

def elimination_rank(M: np.ndarray, rtol: float = PIVOT_RTOL) -> int:
    """Rank by Gaussian elimination with partial pivoting.

    Pivots below ``rtol * max|M|`` count as zero.
    """
    A = np.array(M, dtype=float, copy=True)
    if A.size == 0:
        return 0
    thresh = rtol * float(np.abs(A).max())
    if thresh == 0.0:
        return 0
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.abs(A[r:, c]).argmax())
        if abs(A[piv, c]) <= thresh:
            continue
        A[[r, piv]] = A[[piv, r]]
        A[r + 1:] -= np.outer(A[r + 1:, c] / A[r, c], A[r])
        r += 1
    return r


@dataclass(frozen=True)
class SchauderReport:
    passed: bool
    nonzero: bool
    span_ok: bool
    independent: bool
    rank: int
    basis_constant_estimate: float
    reasons: tuple[str, ...] = ()
    pivot_rtol: float = PIVOT_RTOL

    def to_dict(self) -> dict:
        return {"passed": self.passed, "nonzero": self.nonzero, "span_ok": self.span_ok,
                "independent": self.independent, "rank": self.rank,
                "basis_constant_estimate": self.basis_constant_estimate,
                "reasons": list(self.reasons), "pivot_rtol": self.pivot_rtol}


def _extremal_unit(M: np.ndarray, p) -> np.ndarray:
    if p is INF:
        return np.where(M[int(np.abs(M).sum(axis=1).argmax())] >= 0, 1.0, -1.0)
    if p == 1.0:
        u = np.zeros(M.shape[1])
        u[int(np.abs(M).sum(axis=0).argmax())] = 1.0
        return u
    return np.linalg.svd(M)[2][0]


def basis_constant_candidates(atoms: np.ndarray, p) -> np.ndarray:
    """Coefficient vectors that nearly attain ``||P_n a|| / ||P_m a||`` for each n < m.

    With ``G_m`` the first m atoms as columns, ``a = G_m^+ v`` for the unit
    ``v`` extremal for ``G_n E_n G_m^+``.  For p = 2 and independent atoms
    this hits the supremum exactly.
    """
    N = atoms.shape[0]
    out = []
    for m in range(2, N + 1):
        Gm = atoms[:m].T
        pinv = np.linalg.pinv(Gm)
        for n in range(1, m):
            M = atoms[:n].T @ pinv[:n]
            if not np.any(M):
                continue
            a = np.zeros(N)
            a[:m] = pinv @ _extremal_unit(M, p)
            out.append(a)
    return np.array(out) if out else np.zeros((0, N))


def schauder_check(atoms, space: NormedSpace, sampler: SamplerConfig | None = None,
                   rtol: float = PIVOT_RTOL) -> SchauderReport:
    """Finite-dimensional basis test: atoms nonzero, spanning, independent, plus
    a sampled lower estimate of the basis constant
    ``sup ||sum_{k<=n} a_k tau_k|| / ||sum_{k<=m} a_k tau_k||`` over ``n <= m``."""
    T = np.atleast_2d(np.asarray(atoms, dtype=float))
    if T.shape[0] < 1 or T.shape[1] != space.dim:
        raise StructuralError(f"atoms must be an (N, {space.dim}) array with N >= 1")
    N = T.shape[0]
    reasons = []
    norms = space.norm_rows(T)
    nonzero = bool(np.all(norms > 0))
    if not nonzero:
        reasons.append(f"zero atoms at {np.flatnonzero(norms == 0).tolist()}")
    rank = elimination_rank(T.T, rtol)
    span_ok = rank == space.dim
    if not span_ok:
        reasons.append(f"span has dimension {rank} < {space.dim}")
    independent = rank == N
    if not independent:
        reasons.append(f"{N} atoms but rank {rank}: dependent, so partial sums can cancel")
    sampler = sampler or SamplerConfig(count=400, seed=0, scheme="gaussian")
    Acoef = np.vstack([sample_points(N, sampler), basis_constant_candidates(T, space.norm.p)])
    P = np.cumsum(Acoef[:, :, None] * T[None, :, :], axis=1)
    pn = space.norm_rows(P)  # (samples, N)
    run_max = np.maximum.accumulate(pn, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(pn > 0, run_max / pn, np.where(run_max > 0, np.inf, 1.0))
    est = float(max(1.0, ratio.max()))
    if not independent:
        est = float("inf")
    passed = nonzero and span_ok and independent and np.isfinite(est)
    return SchauderReport(bool(passed), nonzero, span_ok, independent, rank, est, tuple(reasons),
                          rtol)


# ---------------------------------------------------------------- dilation

@dataclass(frozen=True, eq=False)
class DilationResult:
    Z: NormedSpace
    theta: MapHandle
    gamma: MapHandle
    P: MapHandle
    basis_vectors: np.ndarray  # row n is omega_n in Z coordinates
    zero_atom_indices: tuple[int, ...]
    order: tuple[int, ...]  # Z coordinate k holds coefficient order[k]
    case: str
    functionals_zeroed: tuple[int, ...] = ()  # J^c indices whose f_n was nonzero on samples
    checks: dict = field(default_factory=dict)
    direct_sum_norm: str = "max"

    def matrix(self) -> np.ndarray | None:
        """Matrix of P in the Z coordinates when theta is linear."""
        if not self.theta.is_linear:
            return None
        return self.theta.matrix @ self.gamma.matrix

    def to_dict(self) -> dict:
        return {"case": self.case, "Z": {"dim": self.Z.dim, "norm": self.Z.norm.to_dict()},
                "zero_atom_indices": list(self.zero_atom_indices), "order": list(self.order),
                "functionals_zeroed": list(self.functionals_zeroed),
                "direct_sum_norm": self.direct_sum_norm if self.case == "ii" else None,
                "basis_vectors": self.basis_vectors.tolist(), "checks": dict(self.checks)}


def dilate(dec: AtomicDecomposition, samples: int = 100, seed: int = 0,
           tol: float = 1e-10) -> DilationResult:
    """Embed the decomposition into a space with a basis so that an idempotent
    ``P`` carries basis vectors onto the embedded atoms.

    All atoms nonzero: ``Z = R^N`` with the max-partial-sum norm.  Otherwise
    the zero atoms ``J^c`` are split off into a Euclidean factor (direct sum
    normed by the max of the parts), their functionals are taken as 0, and
    ``Q(z + y) = P z + 0``.  All invariants are checked on random samples
    before returning; a failure raises :class:`PreconditionError`.
    """
    X = dec.space
    N = dec.size
    nrm = X.norm_rows(dec.atoms)
    J = [n for n in range(N) if nrm[n] > 0]
    Jc = [n for n in range(N) if nrm[n] == 0]
    if not J:
        raise DegenerateNormError("every atom is zero; nothing to dilate", witness=np.ones(N))
    order = J + Jc
    tauJ = dec.atoms[J]
    zJ = PartialSumNorm(tauJ, X.norm)
    if Jc:
        Znorm = DirectSumNorm((zJ, lp(len(Jc), 2.0).norm), (len(J), len(Jc)))
        case = "ii"
    else:
        Znorm = zJ
        case = "i"
    Z = NormedSpace(N, Znorm, name="Z")
    rng = np.random.default_rng([seed, 0xD11A])
    Xs = rng.uniform(-1.0, 1.0, size=(samples, X.dim))

    zeroed = ()
    if Jc:
        Cs = dec.coefficients(Xs)
        zeroed = tuple(n for n in Jc if np.any(Cs[:, n] != 0.0))
    jidx = np.array(J)
    base_theta = dec.theta
    if base_theta.is_affine:
        M = np.zeros((N, X.dim))
        c = np.zeros(N)
        M[:len(J)] = base_theta.matrix[jidx]
        c[:len(J)] = base_theta.offset[jidx]
        theta = affine(M, c, X, Z, name="theta")
    else:
        pad = len(Jc)

        def theta_fn(V):
            C = base_theta(V)[:, jidx]
            return np.hstack([C, np.zeros((V.shape[0], pad))]) if pad else C

        theta = custom(theta_fn, X, Z, name="theta")
    G = np.zeros((X.dim, N))
    G[:, :len(J)] = tauJ.T
    gamma = affine(G, None, Z, X, name="gamma")
    P = composite([gamma, theta], name="P")
    omega = np.eye(N)[np.argsort(order)]  # omega_n = unit vector at n's Z position

    checks = _dilation_checks(dec, Z, theta, gamma, P, omega, J, Xs, rng, samples)
    bad = {k: v for k, v in checks.items() if k.endswith("_err") and not v <= tol}
    if bad:
        raise PreconditionError(f"dilation invariants fail beyond {tol}: {bad}")
    return DilationResult(Z, theta, gamma, P, omega, tuple(Jc), tuple(order), case, zeroed,
                          checks)


def _dilation_checks(dec, Z, theta, gamma, P, omega, J, Xs, rng, samples) -> dict:
    N = Z.dim
    Zs = rng.standard_normal((samples, N))
    PZ = P(Zs)
    idem = float(np.abs(P(PZ) - PZ).max())
    recon = float(np.abs(gamma(theta(Xs)) - Xs).max())
    atoms_err = 0.0
    for n in J:
        atoms_err = max(atoms_err, float(np.abs(P(omega[n]) - theta(dec.atoms[n])).max()))
    U, V = Zs, rng.standard_normal((samples, N))
    s = rng.standard_normal(samples)[:, None]
    gu, gv = gamma(U), gamma(V)
    scale = np.maximum(1.0, np.abs(gu).max() + np.abs(gv).max())
    additivity = float(np.abs(gamma(U + V) - gu - gv).max() / scale)
    homogeneity = float(np.abs(gamma(s * U) - s * gu).max() / max(1.0, float(np.abs(s * gu).max())))
    return {"samples": samples, "idempotence_err": idem, "reconstruction_err": recon,
            "atom_image_err": atoms_err, "gamma_additivity_rel": additivity,
            "gamma_homogeneity_rel": homogeneity}


def z_norm_violations(Z: NormedSpace, count: int = 10_000, seed: int = 0,
                      rel: float = 1e-12) -> dict:
    """Triangle inequality and homogeneity of the Z norm on random coefficients."""
    rng = np.random.default_rng([seed, 0x2A])
    U = rng.standard_normal((count, Z.dim))
    V = rng.standard_normal((count, Z.dim)) * rng.uniform(0.0, 3.0, (count, 1))
    c = rng.uniform(-5.0, 5.0, (count, 1))
    nu, nv, nuv = Z.norm_rows(U), Z.norm_rows(V), Z.norm_rows(U + V)
    tri = int(np.sum(nuv > (nu + nv) * (1.0 + rel)))
    hom_err = np.abs(Z.norm_rows(c * U) - np.abs(c[:, 0]) * nu)
    hom = int(np.sum(hom_err > rel * np.maximum(1e-300, np.abs(c[:, 0]) * nu)))
    pos = int(np.sum(nu <= 0))
    return {"triangle": tri, "homogeneity": hom, "nonpositive": pos, "count": count}


# ------------------------------------------------------------- perturbation

def perturb_decomposition(dec: AtomicDecomposition, new_atoms, profile: PerturbationProfile,
                          sampler: SamplerConfig, cfg: SolverConfig | None = None,
                          name: str = "") -> AtomicDecomposition:
    """Decomposition ``(f_n o T^-1, omega_n)`` with ``T x = sum f_n(x) omega_n``.

    The three-constant inequality between the two syntheses is checked on
    sampled coefficient differences first; T is then inverted lazily against
    the identity with constants ``(lambda1 + mu b, lambda2)``.
    """
    W = np.asarray(new_atoms, dtype=float)
    if W.shape != dec.atoms.shape:
        raise StructuralError(f"new atoms have shape {W.shape}, expected {dec.atoms.shape}")
    a, b = dec.claimed_bounds
    l1, l2, mu = profile.lambda1, profile.lambda2, profile.mu
    lo, hi = stability_bounds(a, b, l1, l2, mu)
    S_tau, S_omega = dec.synthesis(), dec.synthesis(W)
    check = check_stats(three_constant_stats(S_tau, S_omega, dec.theta, sampler), l1, l2, mu)
    if not check.passed:
        raise PreconditionError(
            f"constants (lambda1={l1}, lambda2={l2}, mu={mu}) fail on sampled coefficient "
            f"differences: worst scaled violation {check.max_violation:.3e}")
    T = composite([dec.theta, S_omega], name="T")
    inv = inverse_of(T, given_profile(l1 + mu * b, l2), cfg, S=identity(dec.space),
                     name="inv(T)")
    gs = tuple(composite([inv, f], name=f"g{k}") for k, f in enumerate(dec.functionals))
    return AtomicDecomposition(gs, W, dec.seq_space, (lo, hi),
                               analysis_handle=composite([inv, dec.theta]), name=name)
