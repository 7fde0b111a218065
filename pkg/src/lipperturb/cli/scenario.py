"""Scenario files: JSON in, validated against a versioned schema, resolved
into library objects.

Unknown fields are rejected everywhere; a mistyped bound constant should
fail loudly instead of silently falling back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ..atomic import AtomicDecomposition, basis_decomposition
from ..errors import LipPerturbError
from ..frames import MetricFrame, atomic_from_frame
from ..maps import (MapHandle, affine, combination, componentwise, composite, identity,
                    linear_functional, translate_to_origin)
from ..perturb.inversion import SolverConfig
from ..sampling import SamplerConfig
from ..spaces import NormedSpace, lp

SCHEMA_VERSION = 1
TASKS = ("estimate-lip", "estimate-profile", "bounds", "invert", "resolvent-scan",
         "frame-perturb", "atomic-perturb", "dilate", "schauder-check", "demo")
FORMULAS = ("main", "hilding", "guo", "guo-sweep", "p-combined", "lambda2-one", "soderlind",
            "barbagallo")


class ScenarioError(LipPerturbError, ValueError):
    """Malformed or inconsistent scenario; ``where`` locates the problem."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def _num():
    return {"type": "number"}


def _matrix():
    return {"type": "array", "items": {"type": "array", "items": _num(), "minItems": 1},
            "minItems": 1}


_SPACE = {
    "type": "object", "additionalProperties": False, "required": ["dim"],
    "properties": {"dim": {"type": "integer", "minimum": 1},
                   "p": {"oneOf": [{"type": "number", "minimum": 1}, {"const": "inf"}]},
                   "weights": {"type": "array", "items": {"type": "number",
                                                           "exclusiveMinimum": 0}}},
}
_SPACE_REF = {"oneOf": [{"type": "string"}, {"$ref": "#/$defs/space"}]}
_MAP = {
    "type": "object", "additionalProperties": False, "required": ["kind"],
    "properties": {
        "kind": {"enum": ["affine", "componentwise", "composite", "identity", "combination",
                          "translated", "functional"]},
        "name": {"type": "string"},
        "matrix": _matrix(), "offset": {"oneOf": [{"type": "array", "items": _num()}, _num()]},
        "row": {"type": "array", "items": _num()},
        "family": {"enum": ["tanh", "sin", "soft-threshold"]},
        "params": {"type": "object", "additionalProperties": False,
                   "properties": {"eps": _num(), "beta": _num(), "kappa": _num()}},
        "space": {"$ref": "#/$defs/space_ref"},
        "domain": {"$ref": "#/$defs/space_ref"},
        "codomain": {"$ref": "#/$defs/space_ref"},
        "children": {"type": "array", "items": {"$ref": "#/$defs/map_ref"}, "minItems": 1},
        "coefficients": {"type": "array", "items": _num()},
    },
}
_MAP_REF = {"oneOf": [{"type": "string"}, {"$ref": "#/$defs/map"}]}
_SAMPLER = {
    "type": "object", "additionalProperties": False,
    "properties": {"count": {"type": "integer", "minimum": 2}, "seed": {"type": "integer"},
                   "radius": {"type": "number", "exclusiveMinimum": 0},
                   "scheme": {"enum": ["uniform-box", "gaussian", "grid"]},
                   "pair_budget": {"type": "integer", "minimum": 1}},
}
_PROFILE = {
    "type": "object", "additionalProperties": False,
    "properties": {"lambda1": {"type": "number", "minimum": 0},
                   "lambda2": {"type": "number", "minimum": 0},
                   "mu": {"type": "number", "minimum": 0},
                   "estimate": {"type": "boolean"},
                   "objective": {"oneOf": [{"enum": ["tinv", "t", "sum", "stability"]},
                                           {"type": "array", "items": _num(),
                                            "minItems": 2, "maxItems": 2}]},
                   "mu_grid": {"type": "array", "items": {"type": "number", "minimum": 0},
                               "minItems": 1},
                   "sampler": {"$ref": "#/$defs/sampler"}},
}
_SOLVER = {
    "type": "object", "additionalProperties": False,
    "properties": {"max_iters": {"type": "integer", "minimum": 1},
                   "target": {"type": "number", "exclusiveMinimum": 0},
                   "restarts": {"type": "integer", "minimum": 0},
                   "seed": {"type": "integer"}},
}
_FRAME = {
    "type": "object", "additionalProperties": False,
    "properties": {"functionals": {"type": "array", "items": {"$ref": "#/$defs/map_ref"},
                                   "minItems": 1},
                   "analysis_matrix": _matrix(),
                   "space": {"$ref": "#/$defs/space_ref"},
                   "seq_space": {"$ref": "#/$defs/space_ref"},
                   "synthesis": {"$ref": "#/$defs/map_ref"},
                   "claimed_bounds": {"type": "array", "items": {"type": "number"},
                                      "minItems": 2, "maxItems": 2}},
}
_DECOMP = {
    "type": "object", "additionalProperties": False,
    "properties": {"functionals": {"type": "array", "items": {"$ref": "#/$defs/map_ref"},
                                   "minItems": 1},
                   "atoms": _matrix(), "basis": _matrix(), "from_frame": {"type": "string"},
                   "space": {"$ref": "#/$defs/space_ref"},
                   "seq_space": {"$ref": "#/$defs/space_ref"},
                   "claimed_bounds": {"type": "array", "items": {"type": "number"},
                                      "minItems": 2, "maxItems": 2}},
}


def _params(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "required": list(required),
            "properties": props}


_MAPREF = {"$ref": "#/$defs/map_ref"}
_SAMPLERREF = {"$ref": "#/$defs/sampler"}
_PROFILEREF = {"$ref": "#/$defs/profile"}
_SOLVERREF = {"$ref": "#/$defs/solver"}
_NUMS = {"type": "array", "items": _num(), "minItems": 1}

TASK_PARAMS = {
    "estimate-lip": _params({"map": _MAPREF, "sampler": _SAMPLERREF}, ["map"]),
    "estimate-profile": _params({"S": _MAPREF, "T": _MAPREF, "sampler": _SAMPLERREF,
                                 "objective": _PROFILE["properties"]["objective"],
                                 "mu_grid": _PROFILE["properties"]["mu_grid"],
                                 "frame_upper": {"type": "number", "exclusiveMinimum": 0}},
                                ["S", "T"]),
    "bounds": _params({"formula": {"enum": list(FORMULAS)}, "lambda1": _num(),
                       "lambda2": _num(), "lambda": _num(), "lip_s": _num(),
                       "lip_sinv": _num(), "eps": _num(), "eps_grid": _NUMS,
                       "lip_tsinv": _num(), "p": _num(), "alpha": _num(), "beta": _num(),
                       "hilbert": {"type": "boolean"}}, ["formula"]),
    "invert": _params({"T": _MAPREF, "S": _MAPREF, "y": _NUMS, "profile": _PROFILEREF,
                       "solver": _SOLVERREF, "lip_sinv": _num()}, ["T", "y", "profile"]),
    "resolvent-scan": _params({"S": _MAPREF, "T": _MAPREF, "alpha_grid": _NUMS,
                               "sampler": _SAMPLERREF, "profile": _PROFILEREF},
                              ["S", "T", "alpha_grid"]),
    "frame-perturb": _params({"frame": {"type": "string"}, "T": _MAPREF,
                              "profile": _PROFILEREF, "sampler": _SAMPLERREF,
                              "validation_sampler": _SAMPLERREF, "solver": _SOLVERREF},
                             ["frame", "T", "profile"]),
    "atomic-perturb": _params({"decomposition": {"type": "string"}, "new_atoms": _matrix(),
                               "profile": _PROFILEREF, "sampler": _SAMPLERREF,
                               "validation_sampler": _SAMPLERREF, "solver": _SOLVERREF},
                              ["decomposition", "new_atoms", "profile"]),
    "dilate": _params({"decomposition": {"type": "string"},
                       "samples": {"type": "integer", "minimum": 1}}, ["decomposition"]),
    "schauder-check": _params({"atoms": _matrix(), "space": {"$ref": "#/$defs/space_ref"},
                               "sampler": _SAMPLERREF}, ["atoms", "space"]),
    "demo": _params({"demo": {"type": "string"}}, ["demo"]),
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object", "additionalProperties": False,
    "required": ["schema_version", "name", "seed", "task", "params"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "minLength": 1},
        "seed": {"type": "integer"},
        "task": {"enum": list(TASKS)},
        "params": {"type": "object"},
        "spaces": {"type": "object", "additionalProperties": {"$ref": "#/$defs/space"}},
        "maps": {"type": "object", "additionalProperties": {"$ref": "#/$defs/map"}},
        "frames": {"type": "object", "additionalProperties": {"$ref": "#/$defs/frame"}},
        "decompositions": {"type": "object",
                           "additionalProperties": {"$ref": "#/$defs/decomposition"}},
        "assertions": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["path", "op"],
            "properties": {"path": {"type": "string"},
                           "op": {"enum": ["==", "<=", ">=", "<", ">", "is"]},
                           "value": {}}}},
        "description": {"type": "string"},
    },
    "allOf": [{"if": {"properties": {"task": {"const": t}}, "required": ["task"]},
               "then": {"properties": {"params": TASK_PARAMS[t]}}} for t in TASKS],
    "$defs": {"space": _SPACE, "space_ref": _SPACE_REF, "map": _MAP, "map_ref": _MAP_REF,
              "sampler": _SAMPLER, "profile": _PROFILE, "solver": _SOLVER, "frame": _FRAME,
              "decomposition": _DECOMP},
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


@dataclass
class Scenario:
    name: str
    seed: int
    task: str
    params: dict
    raw: dict
    spaces: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    frames: dict = field(default_factory=dict)
    decompositions: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)

    # ------------------------------------------------------------ resolution

    def space(self, ref, where: str) -> NormedSpace:
        if isinstance(ref, str):
            if ref not in self.spaces:
                raise ScenarioError(f"unknown space {ref!r}", where)
            return self.spaces[ref]
        return _space(ref, where)

    def map(self, ref, where: str) -> MapHandle:
        if isinstance(ref, str):
            if ref not in self.maps:
                raise ScenarioError(f"unknown map {ref!r}", where)
            return self.maps[ref]
        return _build_map(self, ref, where)

    def frame(self, ref: str, where: str) -> MetricFrame:
        if ref not in self.frames:
            raise ScenarioError(f"unknown frame {ref!r}", where)
        return self.frames[ref]

    def decomposition(self, ref: str, where: str) -> AtomicDecomposition:
        if ref not in self.decompositions:
            raise ScenarioError(f"unknown decomposition {ref!r}", where)
        return self.decompositions[ref]

    def sampler(self, d: dict | None, default_count: int = 40, offset: int = 0) -> SamplerConfig:
        d = dict(d or {})
        d.setdefault("count", default_count)
        d.setdefault("seed", self.seed + offset)
        return SamplerConfig.from_dict(d)

    def solver(self, d: dict | None) -> SolverConfig:
        d = dict(d or {})
        d.setdefault("seed", self.seed)
        return SolverConfig.from_dict(d)


def _space(d: dict, where: str) -> NormedSpace:
    try:
        return NormedSpace.from_dict(d)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), where) from None


def _build_map(sc: Scenario, d: dict, where: str) -> MapHandle:
    kind = d["kind"]
    name = d.get("name", "")

    def need(key):
        if key not in d:
            raise ScenarioError(f"map of kind {kind!r} needs field {key!r}", where)
        return d[key]

    def sp(key, default=None):
        if key in d:
            return sc.space(d[key], f"{where}.{key}")
        return default

    try:
        if kind == "affine":
            A = np.asarray(need("matrix"), dtype=float)
            dom = sp("domain", lp(A.shape[1]))
            return affine(A, d.get("offset"), dom, sp("codomain", NormedSpace(A.shape[0], dom.norm)
                                                     if A.shape[0] == dom.dim else lp(A.shape[0])),
                          name=name)
        if kind == "functional":
            dom = sc.space(need("space"), f"{where}.space")
            return linear_functional(need("row"), dom, float(d.get("offset", 0.0)), name)
        if kind == "identity":
            return identity(sc.space(need("space"), f"{where}.space"))
        if kind == "componentwise":
            params = dict(d.get("params", {}))
            if "offset" in d:
                params["offset"] = d["offset"]
            return componentwise(need("family"), sc.space(need("space"), f"{where}.space"),
                                 name=name, **params)
        kids = [sc.map(c, f"{where}.children[{k}]") for k, c in enumerate(need("children"))]
        if kind == "composite":
            return composite(kids, name=name)
        if kind == "translated":
            return translate_to_origin(kids[0])
        if kind == "combination":
            coefs = need("coefficients")
            if len(coefs) != len(kids):
                raise ScenarioError("coefficients and children differ in length", where)
            return combination(list(zip(coefs, kids)), name=name)
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), where) from None
    raise ScenarioError(f"unsupported map kind {kind!r}", where)


def _build_frame(sc: Scenario, d: dict, where: str) -> MetricFrame:
    if "analysis_matrix" in d:
        V = np.asarray(d["analysis_matrix"], dtype=float)
        X = sc.space(d["space"], f"{where}.space") if "space" in d else lp(V.shape[1])
        fs = [linear_functional(v, X) for v in V]
    elif "functionals" in d:
        fs = [sc.map(f, f"{where}.functionals[{k}]") for k, f in enumerate(d["functionals"])]
        X = fs[0].domain
        V = None
    else:
        raise ScenarioError("a frame needs 'functionals' or 'analysis_matrix'", where)
    seq = sc.space(d["seq_space"], f"{where}.seq_space") if "seq_space" in d \
        else NormedSpace(len(fs), X.norm)
    if "synthesis" in d:
        S = sc.map(d["synthesis"], f"{where}.synthesis")
    elif V is not None:
        G = np.zeros((X.dim, seq.dim))
        G[:, :V.shape[0]] = np.linalg.pinv(V)
        S = affine(G, None, seq, X, name="pinv")
    else:
        raise ScenarioError("nonlinear frames need an explicit 'synthesis' map", where)
    if "claimed_bounds" in d:
        bounds = tuple(d["claimed_bounds"])
    elif V is not None and X.norm.p == 2.0 and X.norm.unweighted and seq.norm.p == 2.0 \
            and seq.norm.unweighted:
        sv = np.linalg.svd(V, compute_uv=False)
        bounds = (float(sv.min()), float(sv.max()))
    else:
        raise ScenarioError("claimed_bounds required (exact bounds are only derived for "
                            "linear frames on unweighted l^2)", where)
    try:
        return MetricFrame(tuple(fs), seq, S, bounds, name=where.rsplit(".", 1)[-1])
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), where) from None


def _build_decomposition(sc: Scenario, d: dict, where: str) -> AtomicDecomposition:
    try:
        if "from_frame" in d:
            return atomic_from_frame(sc.frame(d["from_frame"], f"{where}.from_frame"))
        if "basis" in d:
            W = np.asarray(d["basis"], dtype=float)
            X = sc.space(d["space"], f"{where}.space") if "space" in d else lp(W.shape[0])
            seq = sc.space(d["seq_space"], f"{where}.seq_space") if "seq_space" in d else None
            return basis_decomposition(W, X, seq)
        for key in ("functionals", "atoms", "claimed_bounds"):
            if key not in d:
                raise ScenarioError(f"missing field {key!r}", where)
        fs = [sc.map(f, f"{where}.functionals[{k}]") for k, f in enumerate(d["functionals"])]
        seq = sc.space(d["seq_space"], f"{where}.seq_space") if "seq_space" in d \
            else NormedSpace(len(fs), fs[0].domain.norm)
        return AtomicDecomposition(tuple(fs), np.asarray(d["atoms"], dtype=float), seq,
                                   tuple(d["claimed_bounds"]))
    except ScenarioError:
        raise
    except (ValueError, TypeError, np.linalg.LinAlgError) as exc:
        raise ScenarioError(str(exc), where) from None


def validate(raw) -> None:
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}"
                              for p in e.absolute_path)
        more = f" (+{len(errors) - 1} more)" if len(errors) > 1 else ""
        raise ScenarioError(e.message + more, where)


def scenario_from_dict(raw: dict, seed: int | None = None) -> Scenario:
    validate(raw)
    sc = Scenario(raw["name"], int(raw["seed"] if seed is None else seed), raw["task"],
                  dict(raw["params"]), raw, assertions=list(raw.get("assertions", [])))
    for k, v in raw.get("spaces", {}).items():
        sc.spaces[k] = _space(v, f"$.spaces.{k}")
    for k, v in raw.get("maps", {}).items():
        sc.maps[k] = _build_map(sc, v, f"$.maps.{k}")
    for k, v in raw.get("frames", {}).items():
        sc.frames[k] = _build_frame(sc, v, f"$.frames.{k}")
    for k, v in raw.get("decompositions", {}).items():
        sc.decompositions[k] = _build_decomposition(sc, v, f"$.decompositions.{k}")
    return sc


def load_scenario(path, seed: int | None = None) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(p)) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}",
                            f"{p}:{exc.lineno}:{exc.colno}") from None
    return scenario_from_dict(raw, seed)
