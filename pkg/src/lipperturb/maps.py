"""Evaluable maps between normed spaces and their Lipschitz numbers.

A :class:`MapHandle` wraps a *batch* evaluator ``(n, dim) -> (n, codim)``.
Handles also expose ``diff(X, Y)`` = ``f(X) - f(Y)``; affine and
componentwise handles compute it without the offset, which is what makes
:func:`translate_to_origin` preserve difference quotients bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (DegenerateSampleError, StructuralError,
                     UnsupportedConfigurationError)
from .sampling import SamplerConfig, pair_indices, sample_points
from .spaces import INF, NormDescriptor, NormedSpace, Vector, lp

BatchFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MapHandle:
    domain: NormedSpace
    codomain: NormedSpace
    kind: str
    fn: BatchFn
    params: dict = field(default_factory=dict)
    difference: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = ""
    serializable: bool = True
    cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[-1] != self.domain.dim:
            raise StructuralError(
                f"map {self.label} expects inputs of dimension {self.domain.dim}, "
                f"got {X2.shape[-1]}")
        Y = np.asarray(self.fn(X2), dtype=float).reshape(X2.shape[0], self.codomain.dim)
        return Y[0] if single else Y

    def diff(self, X, Y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.difference is not None:
            return self.difference(X, Y)
        return self(X) - self(Y)

    @property
    def label(self) -> str:
        return self.name or self.kind

    @property
    def matrix(self) -> np.ndarray | None:
        return self.params.get("matrix")

    @property
    def offset(self) -> np.ndarray | None:
        return self.params.get("offset")

    @property
    def is_affine(self) -> bool:
        return self.kind == "affine"

    @property
    def is_linear(self) -> bool:
        return self.is_affine and not np.any(self.params["offset"])

    def __repr__(self) -> str:
        return (f"MapHandle({self.label}: R^{self.domain.dim} -> R^{self.codomain.dim}, "
                f"kind={self.kind})")


def evaluate(m: MapHandle, x) -> Vector:
    """Evaluate ``m`` at a single point; the result lives in ``m.codomain``."""
    if isinstance(x, Vector):
        if x.space.dim != m.domain.dim:
            raise StructuralError(
                f"point of dimension {x.space.dim} is not in the domain of {m.label} "
                f"(dimension {m.domain.dim})")
        x = x.coords
    return Vector(m.codomain, m(np.asarray(x, dtype=float).reshape(-1)))


# ---------------------------------------------------------------- constructors

def affine(matrix, offset=None, domain: NormedSpace | None = None,
           codomain: NormedSpace | None = None, name: str = "") -> MapHandle:
    A = np.array(matrix, dtype=float, copy=True)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    m_out, n_in = A.shape
    c = np.zeros(m_out) if offset is None else np.array(offset, dtype=float).reshape(-1)
    if c.shape[0] != m_out:
        raise StructuralError(f"offset has length {c.shape[0]}, matrix has {m_out} rows")
    domain = domain or lp(n_in)
    codomain = codomain or lp(m_out, domain.p if domain.p is not None else 2.0)
    if domain.dim != n_in or codomain.dim != m_out:
        raise StructuralError(
            f"matrix shape {A.shape} does not match R^{domain.dim} -> R^{codomain.dim}")
    A.setflags(write=False)
    c.setflags(write=False)
    return MapHandle(domain, codomain, "affine",
                     fn=lambda X: X @ A.T + c,
                     params={"matrix": A, "offset": c},
                     difference=lambda X, Y: (X - Y) @ A.T,
                     name=name)


def identity(space: NormedSpace) -> MapHandle:
    return affine(np.eye(space.dim), None, space, space, name="identity")


def linear_functional(row, space: NormedSpace, offset: float = 0.0, name: str = "") -> MapHandle:
    """Scalar affine functional ``x -> <row, x> + offset``."""
    return affine(np.asarray(row, dtype=float).reshape(1, -1), [offset], space, lp(1), name)


FAMILIES = ("tanh", "sin", "soft-threshold")


def _family_parts(family: str, params: dict):
    eps = float(params.get("eps", 0.0))
    beta = float(params.get("beta", 1.0))
    if family == "tanh":
        return lambda X: X + eps * np.tanh(beta * X), lambda X, Y: (X - Y) + eps * (
            np.tanh(beta * X) - np.tanh(beta * Y))
    if family == "sin":
        return lambda X: X + eps * np.sin(beta * X), lambda X, Y: (X - Y) + eps * (
            np.sin(beta * X) - np.sin(beta * Y))
    if family == "soft-threshold":
        kappa = float(params.get("kappa", 0.0))
        if kappa < 0:
            raise ValueError("soft-threshold level kappa must be nonnegative")
        f = lambda X: np.sign(X) * np.maximum(np.abs(X) - kappa, 0.0)
        return f, lambda X, Y: f(X) - f(Y)
    raise ValueError(f"unknown componentwise family {family!r}; expected one of {FAMILIES}")


def family_constants(family: str, params: dict) -> tuple[float, float]:
    """(bi-Lipschitz, Lipschitz) constants of the scalar family member.

    These transfer unchanged to the componentwise map on any weighted l^p
    space, since the norm is monotone in the absolute coordinates.
    """
    eps = float(params.get("eps", 0.0))
    beta = float(params.get("beta", 1.0))
    if family == "tanh":
        k = eps * beta
        lo, hi = min(1.0, 1.0 + k), max(1.0, 1.0 + k)
    elif family == "sin":
        k = abs(eps * beta)
        lo, hi = 1.0 - k, 1.0 + k
    elif family == "soft-threshold":
        return (1.0 if float(params.get("kappa", 0.0)) == 0.0 else 0.0), 1.0
    else:
        raise ValueError(f"unknown componentwise family {family!r}")
    if lo > 0:
        return lo, hi
    return 0.0, max(abs(lo), abs(hi))


def componentwise(family: str, space: NormedSpace, name: str = "", **params) -> MapHandle:
    """``x -> phi(x) + offset`` applied coordinatewise.

    Families: ``tanh`` (x + eps*tanh(beta x)), ``sin`` (x + eps*sin(beta x)),
    ``soft-threshold`` (shrinkage by ``kappa``).
    """
    f, d = _family_parts(family, params)
    off = np.zeros(space.dim) + np.asarray(params.get("offset", 0.0), dtype=float)
    off.setflags(write=False)
    stored = {k: v for k, v in params.items() if k != "offset"}
    stored.update(family=family, offset=off)
    if np.any(off):
        fn = lambda X: f(X) + off
    else:
        fn = f
    return MapHandle(space, space, "componentwise", fn=fn, params=stored, difference=d,
                     name=name or family)


def composite(children: Sequence[MapHandle], name: str = "") -> MapHandle:
    """Pipeline composition: ``children[0]`` is applied first."""
    children = list(children)
    if not children:
        raise ValueError("composite needs at least one map")
    for a, b in zip(children, children[1:]):
        if a.codomain.dim != b.domain.dim:
            raise StructuralError(
                f"cannot compose {a.label} (into R^{a.codomain.dim}) with {b.label} "
                f"(from R^{b.domain.dim})")

    def fn(X):
        for ch in children:
            X = ch(X)
        return X

    def difference(X, Y):
        for ch in children[:-1]:
            X, Y = ch(X), ch(Y)
        return children[-1].diff(X, Y)

    return MapHandle(children[0].domain, children[-1].codomain, "composite", fn=fn,
                     params={"children": children}, difference=difference, name=name,
                     serializable=all(c.serializable for c in children))


def stack(children: Sequence[MapHandle], codomain: NormedSpace | None = None,
          name: str = "") -> MapHandle:
    """``x -> (f_1(x), ..., f_N(x), 0, ...)``: scalar maps stacked into a vector.

    The result is zero-padded to ``codomain`` (default ``R^N`` with l^2).
    When every child is affine the result is a single affine handle.
    """
    children = list(children)
    if not children:
        raise ValueError("stack needs at least one map")
    dom = children[0].domain
    for ch in children:
        if ch.codomain.dim != 1 or ch.domain.dim != dom.dim:
            raise StructuralError(f"stack members must be scalar maps on R^{dom.dim}; "
                                  f"{ch.label} is R^{ch.domain.dim} -> R^{ch.codomain.dim}")
    n = len(children)
    cod = codomain or lp(n)
    if cod.dim < n:
        raise StructuralError(f"{n} functionals do not fit into a space of dimension {cod.dim}")
    if all(ch.kind == "affine" for ch in children):
        A = np.zeros((cod.dim, dom.dim))
        c = np.zeros(cod.dim)
        for k, ch in enumerate(children):
            A[k] = ch.matrix[0]
            c[k] = ch.offset[0]
        return affine(A, c, dom, cod, name=name)
    pad = cod.dim - n

    def fn(X):
        cols = [ch(X) for ch in children]
        if pad:
            cols.append(np.zeros((X.shape[0], pad)))
        return np.hstack(cols)

    def difference(X, Y):
        cols = [ch.diff(X, Y) for ch in children]
        if pad:
            cols.append(np.zeros((X.shape[0], pad)))
        return np.hstack(cols)

    return MapHandle(dom, cod, "stack", fn=fn, params={"children": children},
                     difference=difference, name=name,
                     serializable=all(ch.serializable for ch in children))


def coordinate(space: NormedSpace, k: int, name: str = "") -> MapHandle:
    """The k-th coordinate functional on ``space``."""
    row = np.zeros(space.dim)
    row[k] = 1.0
    return linear_functional(row, space, name=name or f"e{k}*")


def combination(terms: Sequence[tuple[float, MapHandle]], name: str = "") -> MapHandle:
    """Linear combination ``sum c_i m_i`` of maps sharing domain and codomain."""
    terms = [(float(c), m) for c, m in terms]
    m0 = terms[0][1]
    for _, m in terms:
        if m.domain.dim != m0.domain.dim or m.codomain.dim != m0.codomain.dim:
            raise StructuralError("all terms of a combination must share domain and codomain")

    def fn(X):
        return sum(c * m(X) for c, m in terms)

    def difference(X, Y):
        return sum(c * m.diff(X, Y) for c, m in terms)

    return MapHandle(m0.domain, m0.codomain, "combination", fn=fn, params={"terms": terms},
                     difference=difference, name=name,
                     serializable=all(m.serializable for _, m in terms))


def scaled(m: MapHandle, c: float, name: str = "") -> MapHandle:
    return combination([(c, m)], name=name)


def custom(fn: Callable, domain: NormedSpace, codomain: NormedSpace, name: str = "",
           vectorized: bool = True) -> MapHandle:
    """Wrap user code.  Not serialisable; flagged as such in descriptors."""
    if vectorized:
        batch = fn
    else:
        batch = lambda X: np.stack([np.asarray(fn(x), dtype=float).reshape(-1) for x in X])
    return MapHandle(domain, codomain, "custom", fn=batch, name=name or "custom",
                     serializable=False)


def translate_to_origin(m: MapHandle) -> MapHandle:
    """The translate ``x -> m(x) - m(0)``.

    Differences are delegated to ``m`` itself, so every difference quotient
    of the result equals the corresponding quotient of ``m`` exactly.
    """
    m0 = m(np.zeros(m.domain.dim))
    if not np.any(m0):
        return m
    if m.kind == "affine":
        return affine(m.matrix, None, m.domain, m.codomain, name=m.name)
    if m.kind == "componentwise":
        params = {k: v for k, v in m.params.items() if k not in ("family", "offset")}
        return componentwise(m.params["family"], m.domain, name=m.name, **params)
    m0 = m0.copy()
    m0.setflags(write=False)
    return MapHandle(m.domain, m.codomain, "translated", fn=lambda X: m(X) - m0,
                     params={"children": [m], "shift": m0}, difference=m.diff,
                     name=m.name, serializable=m.serializable)


# ------------------------------------------------------------ Lipschitz numbers

@dataclass(frozen=True)
class LipEstimate:
    """On-sample extrema of ``||m(x)-m(y)|| / d(x,y)``.

    ``lower`` is a certified lower bound for Lip(m).  ``bilip_lower`` is the
    on-sample minimum, which can only *over*-estimate the true bi-Lipschitz
    constant.
    """

    lower: float
    bilip_lower: float
    pair_count: int
    sample_seed: int

    def to_dict(self) -> dict:
        return {"lower": self.lower, "bilip_lower": self.bilip_lower,
                "pair_count": self.pair_count, "sample_seed": self.sample_seed}


def difference_quotients(m: MapHandle, X: np.ndarray, cfg: SamplerConfig) -> np.ndarray:
    i, j = pair_indices(X.shape[0], cfg)
    d = m.domain.norm_rows(X[i] - X[j])
    keep = d > 0
    if not np.any(keep):
        raise DegenerateSampleError("all sampled points coincide; no difference quotient exists")
    i, j, d = i[keep], j[keep], d[keep]
    return m.codomain.norm_rows(m.diff(X[i], X[j])) / d


def lip_estimate(m: MapHandle, sampler: SamplerConfig, points: np.ndarray | None = None) -> LipEstimate:
    key = ("lip", sampler) if points is None else None
    if key is not None and key in m.cache:
        return m.cache[key]
    X = sample_points(m.domain.dim, sampler) if points is None else np.asarray(points, float)
    q = difference_quotients(m, X, sampler)
    est = LipEstimate(float(q.max()), float(q.min()), int(q.size), sampler.seed)
    if key is not None:
        m.cache[key] = est
    return est


def spectral_norm(A: np.ndarray, rtol: float = 1e-10, max_squarings: int = 64) -> float:
    """Largest singular value by power iteration on the Gram matrix.

    The iteration is accelerated by repeated squaring (``G, G^2, G^4, ...``)
    so nearly equal leading singular values still separate in a few dozen
    steps.  The Rayleigh quotient of the iterate is returned, which never
    exceeds the true value.
    """
    A = np.asarray(A, dtype=float)
    G = A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T
    scale = np.abs(G).max() if G.size else 0.0
    if scale == 0.0:
        return 0.0
    G = G / scale
    M = G.copy()
    best = 0.0
    stable = 0
    for _ in range(max_squarings):
        v = M[:, np.argmax(np.einsum("ij,ij->j", M, M))]
        est = float(v @ G @ v) / float(v @ v)
        if best > 0 and abs(est - best) <= 0.01 * rtol * best:
            stable += 1
            if stable >= 2:
                best = max(best, est)
                break
        else:
            stable = 0
        best = max(best, est)
        M = M @ M
        M /= np.linalg.norm(M)
    return math.sqrt(best * scale)


def operator_norm(A: np.ndarray, p) -> float:
    """Induced norm of ``A`` from l^p to l^p for p in {1, 2, inf}."""
    A = np.asarray(A, dtype=float)
    if p is INF:
        return float(np.abs(A).sum(axis=1).max())
    if p == 1.0:
        return float(np.abs(A).sum(axis=0).max())
    if p == 2.0:
        return spectral_norm(A)
    raise UnsupportedConfigurationError(f"no exact induced norm for p = {p!r}")


def lip_exact_affine(m: MapHandle) -> float:
    """Exact Lipschitz number of an affine handle (the induced norm of its matrix)."""
    if m.kind != "affine":
        raise UnsupportedConfigurationError(f"exact Lipschitz number needs an affine map, got {m.kind}")
    nd, nc = m.domain.norm, m.codomain.norm
    if not (isinstance(nd, NormDescriptor) and isinstance(nc, NormDescriptor)):
        raise UnsupportedConfigurationError("exact Lipschitz number needs l^p spaces")
    if not (nd.unweighted and nc.unweighted):
        raise UnsupportedConfigurationError("exact Lipschitz number is not available for weighted norms")
    if nd.p != nc.p or not (nd.p is INF or nd.p in (1.0, 2.0)):
        raise UnsupportedConfigurationError(
            f"exact Lipschitz number needs equal p in {{1, 2, inf}}, got {nd.p} -> {nc.p}")
    return operator_norm(m.matrix, nd.p)


# ----------------------------------------------------------------- inverses

def _componentwise_inverse(m: MapHandle) -> MapHandle | None:
    family = m.params["family"]
    lo, hi = family_constants(family, m.params)
    if lo <= 0:
        return None
    f, _ = _family_parts(family, m.params)
    off = m.params["offset"]

    def inv(Y):
        target = Y - off
        # f(0) = 0 and |f(x)| >= lo |x| bracket the root in [-|t|/lo, |t|/lo]
        R = np.abs(target) / lo
        a, b = -R - 1e-300, R + 1e-300
        for _ in range(2100):
            mid = 0.5 * (a + b)
            if np.all((mid == a) | (mid == b)):
                break
            low = f(mid) < target
            a = np.where(low, mid, a)
            b = np.where(low, b, mid)
        # pick the closer of the two bracketing floats
        return np.where(np.abs(f(a) - target) <= np.abs(f(b) - target), a, b)

    return MapHandle(m.codomain, m.domain, "inverse-of", fn=inv,
                     params={"children": [m], "solver": "componentwise-bisection"},
                     name=f"inv({m.label})")


def exact_inverse(m: MapHandle) -> MapHandle | None:
    """A closed-form (or machine-precision scalar) inverse when one is available."""
    if m.kind == "affine":
        A = m.matrix
        if A.shape[0] != A.shape[1]:
            return None
        try:
            Ainv = np.linalg.inv(A)
        except np.linalg.LinAlgError:
            return None
        return affine(Ainv, -Ainv @ m.offset, m.codomain, m.domain, name=f"inv({m.label})")
    if m.kind == "componentwise":
        return _componentwise_inverse(m)
    if m.kind == "composite":
        parts = [exact_inverse(c) for c in reversed(m.params["children"])]
        if any(p is None for p in parts):
            return None
        return composite(parts, name=f"inv({m.label})")
    if m.kind == "combination" and len(m.params["terms"]) == 1:
        c, inner = m.params["terms"][0]
        inner_inv = exact_inverse(inner)
        if inner_inv is None or c == 0:
            return None
        return composite([scaled(identity(m.codomain), 1.0 / c), inner_inv])
    if m.kind == "inverse-of":
        return m.params["children"][0]
    return None


def exact_lipschitz(m: MapHandle) -> float | None:
    """Exact Lip(m) for the handle kinds where it is cheaply known, else None."""
    try:
        if m.kind == "affine":
            return lip_exact_affine(m)
    except UnsupportedConfigurationError:
        return None
    if m.kind == "componentwise" and isinstance(m.domain.norm, NormDescriptor):
        return family_constants(m.params["family"], m.params)[1]
    return None


# ------------------------------------------------------------- serialisation

def map_to_dict(m: MapHandle) -> dict:
    if not m.serializable:
        return {"kind": m.kind, "name": m.label, "serializable": False}
    d: dict = {"kind": m.kind}
    if m.kind == "affine":
        d["matrix"] = m.matrix.tolist()
        d["offset"] = m.offset.tolist()
    elif m.kind == "componentwise":
        d["family"] = m.params["family"]
        d["params"] = {k: v for k, v in m.params.items() if k not in ("family", "offset")}
        d["offset"] = m.params["offset"].tolist()
    elif m.kind in ("composite", "translated", "inverse-of", "stack"):
        d["children"] = [map_to_dict(c) for c in m.params["children"]]
    elif m.kind == "combination":
        d["children"] = [map_to_dict(c) for _, c in m.params["terms"]]
        d["params"] = {"coefficients": [c for c, _ in m.params["terms"]]}
    d["domain"] = m.domain.to_dict()
    d["codomain"] = m.codomain.to_dict()
    return d


def map_from_dict(d: dict, domain: NormedSpace | None = None,
                  codomain: NormedSpace | None = None) -> MapHandle:
    if d.get("serializable", True) is False or d["kind"] == "custom":
        raise UnsupportedConfigurationError(f"map {d.get('name', '?')} is code-only and cannot be rebuilt")
    dom = domain or (NormedSpace.from_dict(d["domain"]) if "domain" in d else None)
    cod = codomain or (NormedSpace.from_dict(d["codomain"]) if "codomain" in d else None)
    kind = d["kind"]
    if kind == "affine":
        return affine(d["matrix"], d.get("offset"), dom, cod)
    if kind == "componentwise":
        params = dict(d.get("params", {}))
        if "offset" in d:
            params["offset"] = d["offset"]
        return componentwise(d["family"], dom, **params)
    children = [map_from_dict(c) for c in d.get("children", [])]
    if kind == "composite":
        return composite(children)
    if kind == "translated":
        return translate_to_origin(children[0])
    if kind == "stack":
        return stack(children, cod)
    if kind == "combination":
        return combination(list(zip(d["params"]["coefficients"], children)))
    if kind == "inverse-of":
        inv = exact_inverse(children[0])
        if inv is None:
            raise UnsupportedConfigurationError("inverse-of descriptor has no exact inverse")
        return inv
    raise ValueError(f"unknown map kind {kind!r}")
