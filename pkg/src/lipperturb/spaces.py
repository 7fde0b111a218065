"""Finite-dimensional normed spaces and their vectors.

Three norm families are available:

* :class:`NormDescriptor` -- weighted l^p, 1 <= p <= inf.  Also used as the
  concrete sequence space that coefficient maps land in.
* :class:`PartialSumNorm` -- ``||a|| = max_n ||sum_{k<=n} a_k tau_k||``, the
  norm a dilation space is built on.
* :class:`DirectSumNorm` -- max of the component norms of a block vector.

All norms act row-wise on arrays of shape ``(..., dim)`` through
``norm_rows`` so that sampling code can stay vectorised.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np

from .errors import DegenerateNormError, StructuralError


class _Infinity(enum.Enum):
    INF = "inf"

    def __repr__(self) -> str:
        return "INF"


INF = _Infinity.INF
"""The p = infinity variant.  Deliberately not a float."""

PValue = Union[float, _Infinity]


def parse_p(p: Any) -> PValue:
    if p is INF:
        return INF
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        p = float(p)
    p = float(p)
    if math.isinf(p) and p > 0:
        return INF
    if not math.isfinite(p) or p < 1.0:
        raise ValueError(f"norm exponent must satisfy p >= 1 or p = inf, got {p!r}")
    return p


def _weighted_lp(X: np.ndarray, p: PValue, w: np.ndarray | None) -> np.ndarray:
    A = np.abs(X)
    if p is INF:
        if w is not None:
            A = A * w
        return A.max(axis=-1) if A.shape[-1] else np.zeros(A.shape[:-1])
    if p == 1.0:
        return (A * w).sum(axis=-1) if w is not None else A.sum(axis=-1)
    if w is not None:
        A = A * w ** (1.0 / p)
    # rescale by the largest entry so large/small inputs neither overflow nor underflow
    m = A.max(axis=-1, keepdims=True) if A.shape[-1] else np.zeros(A.shape[:-1] + (1,))
    safe = np.where(m > 0, m, 1.0)
    if p == 2.0:
        s = np.sqrt(((A / safe) ** 2).sum(axis=-1))
    else:
        s = ((A / safe) ** p).sum(axis=-1) ** (1.0 / p)
    return s * m[..., 0]


@dataclass(frozen=True)
class NormDescriptor:
    """Weighted l^p norm ``(sum w_i |v_i|^p)^(1/p)`` (``max w_i |v_i|`` for p = inf)."""

    p: PValue = 2.0
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", parse_p(self.p))
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if not all(x > 0 and math.isfinite(x) for x in w):
                raise ValueError("norm weights must be positive and finite")
            object.__setattr__(self, "weights", w)

    @property
    def is_inf(self) -> bool:
        return self.p is INF

    @property
    def unweighted(self) -> bool:
        return self.weights is None or all(x == 1.0 for x in self.weights)

    def check_dim(self, dim: int) -> None:
        if self.weights is not None and len(self.weights) != dim:
            raise StructuralError(
                f"{len(self.weights)} weights given for a {dim}-dimensional space")

    def norm_rows(self, X: np.ndarray) -> np.ndarray:
        w = None if self.unweighted else np.asarray(self.weights)
        return _weighted_lp(np.asarray(X, dtype=float), self.p, w)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"p": "inf" if self.is_inf else self.p}
        if self.weights is not None:
            d["weights"] = list(self.weights)
        return d


@dataclass(frozen=True, eq=False)
class PartialSumNorm:
    """``||a|| = max_n ||sum_{k<=n} a_k tau_k||_base`` over a fixed atom list.

    Only a genuine norm when every atom is nonzero (then a nonzero
    coefficient vector has a nonzero first partial sum at its first nonzero
    entry); the constructor refuses zero atoms.
    """

    atoms: np.ndarray  # (N, dim_base)
    base: NormDescriptor

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float, copy=True)
        if atoms.ndim != 2:
            raise StructuralError("atoms must be a 2-d array (N, dim)")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        zero = np.flatnonzero(self.base.norm_rows(atoms) == 0.0)
        if zero.size:
            witness = np.zeros(atoms.shape[0])
            witness[zero[0]] = 1.0
            raise DegenerateNormError(
                f"partial-sum norm is degenerate: atom {int(zero[0])} is zero, so "
                f"the unit coefficient vector e_{int(zero[0])} has norm 0", witness=witness)

    @property
    def p(self):
        return self.base.p

    def partial_sums(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        return np.cumsum(A[..., :, None] * self.atoms, axis=-2)

    def norm_rows(self, A: np.ndarray) -> np.ndarray:
        # homogeneity: scale each row to max |a_k| = 1 so products of tiny
        # coefficients and tiny atoms do not underflow to zero
        A = np.asarray(A, dtype=float)
        s = np.abs(A).max(axis=-1, keepdims=True)
        safe = np.where(s > 0, s, 1.0)
        return self.base.norm_rows(self.partial_sums(A / safe)).max(axis=-1) * safe[..., 0]

    def to_dict(self) -> dict:
        return {"kind": "partial-sum", "atoms": self.atoms.tolist(), "base": self.base.to_dict()}


@dataclass(frozen=True, eq=False)
class DirectSumNorm:
    """Max of the component norms on a block decomposition ``dims``."""

    parts: tuple  # tuple of norm objects
    dims: tuple[int, ...]

    def norm_rows(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1])
        start = 0
        for part, d in zip(self.parts, self.dims):
            if d:
                out = np.maximum(out, part.norm_rows(X[..., start:start + d]))
            start += d
        return out

    def to_dict(self) -> dict:
        return {"kind": "direct-sum", "combine": "max", "dims": list(self.dims),
                "parts": [p.to_dict() for p in self.parts]}


def norm_from_dict(d: dict, dim: int | None = None):
    kind = d.get("kind", "lp")
    if kind == "lp":
        return NormDescriptor(d.get("p", 2.0), d.get("weights"))
    if kind == "partial-sum":
        return PartialSumNorm(np.asarray(d["atoms"], dtype=float), norm_from_dict(d["base"]))
    if kind == "direct-sum":
        return DirectSumNorm(tuple(norm_from_dict(p) for p in d["parts"]), tuple(d["dims"]))
    raise ValueError(f"unknown norm kind {kind!r}")


@dataclass(frozen=True, eq=False)
class NormedSpace:
    dim: int
    norm: Any = field(default_factory=NormDescriptor)
    name: str = ""

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise StructuralError(f"dimension must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        if isinstance(self.norm, NormDescriptor):
            self.norm.check_dim(self.dim)
        elif isinstance(self.norm, PartialSumNorm) and self.norm.atoms.shape[0] != self.dim:
            raise StructuralError("partial-sum norm needs one atom per coordinate")

    def __eq__(self, other):
        if not isinstance(other, NormedSpace):
            return NotImplemented
        return self.dim == other.dim and self.norm.to_dict() == other.norm.to_dict()

    def __hash__(self):
        return hash((self.dim, repr(self.norm.to_dict())))

    @property
    def p(self):
        return getattr(self.norm, "p", None)

    def norm_rows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise StructuralError(f"expected trailing dimension {self.dim}, got {X.shape[-1]}")
        return self.norm.norm_rows(X)

    def vector(self, coords) -> "Vector":
        return Vector(self, coords)

    def zero(self) -> "Vector":
        return Vector(self, np.zeros(self.dim))

    def basis(self, n: int) -> "Vector":
        e = np.zeros(self.dim)
        e[n] = 1.0
        return Vector(self, e)

    def to_dict(self) -> dict:
        d = {"dim": self.dim}
        nd = self.norm.to_dict()
        if isinstance(self.norm, NormDescriptor):
            d.update(nd)
        else:
            d["norm"] = nd
        return d

    @classmethod
    def from_dict(cls, d: dict, name: str = "") -> "NormedSpace":
        extra = set(d) - {"dim", "p", "weights", "norm"}
        if extra:
            raise ValueError(f"unknown space fields: {sorted(extra)}")
        if "norm" in d:
            return cls(d["dim"], norm_from_dict(d["norm"]), name)
        return cls(d["dim"], NormDescriptor(d.get("p", 2.0), d.get("weights")), name)


def lp(dim: int, p: Any = 2.0, weights: Sequence[float] | None = None) -> NormedSpace:
    """Shorthand for ``NormedSpace(dim, NormDescriptor(p, weights))``."""
    return NormedSpace(dim, NormDescriptor(p, None if weights is None else tuple(weights)))


@dataclass(frozen=True, eq=False)
class Vector:
    space: NormedSpace
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float, copy=True).reshape(-1)
        if c.shape[0] != self.space.dim:
            raise StructuralError(
                f"vector has {c.shape[0]} coordinates, space has dimension {self.space.dim}")
        if not np.all(np.isfinite(c)):
            raise ValueError("vector coordinates must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __sub__(self, other: "Vector") -> "Vector":
        _same_space(self.space, other.space)
        return Vector(self.space, self.coords - other.coords)

    def __add__(self, other: "Vector") -> "Vector":
        _same_space(self.space, other.space)
        return Vector(self.space, self.coords + other.coords)

    def __mul__(self, c: float) -> "Vector":
        return Vector(self.space, float(c) * self.coords)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Vector({self.coords.tolist()})"


def _same_space(a: NormedSpace, b: NormedSpace) -> None:
    if a.dim != b.dim:
        raise StructuralError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _coords(space: NormedSpace, v) -> np.ndarray:
    if isinstance(v, Vector):
        _same_space(space, v.space)
        return v.coords
    c = np.asarray(v, dtype=float)
    if c.shape[-1:] != (space.dim,):
        raise StructuralError(f"expected {space.dim} coordinates, got shape {c.shape}")
    return c


def norm(space: NormedSpace, v) -> float:
    return float(space.norm_rows(_coords(space, v)))


def distance(space: NormedSpace, u, v) -> float:
    return norm(space, _coords(space, u) - _coords(space, v))


def seq_embed(space: NormedSpace, coeffs: Sequence[float]) -> Vector:
    """Zero-pad a finite coefficient list into ``space``."""
    c = np.asarray(list(coeffs), dtype=float).reshape(-1)
    if c.shape[0] > space.dim:
        raise StructuralError(
            f"{c.shape[0]} coefficients do not fit a {space.dim}-dimensional sequence space")
    out = np.zeros(space.dim)
    out[: c.shape[0]] = c
    return Vector(space, out)
