"""Lipschitz perturbation of maps, metric frames and atomic decompositions
on finite-dimensional normed spaces."""

from .atomic import (AtomicDecomposition, DilationResult, SchauderReport, ValidationReport,
                     basis_decomposition, check_decomposition, dilate, graph_embedding,
                     lift_decomposition, perturb_decomposition, schauder_check)
from .errors import (DegenerateNormError, DegenerateSampleError, DomainError,
                     InconsistentPairError, LipPerturbError, NonconvergenceError,
                     NotVerifiableError, PreconditionError, StructuralError,
                     UnsupportedConfigurationError)
from .frames import (FrameBoundEstimate, MetricFrame, analysis, atomic_from_frame,
                     frame_bounds_estimate, frame_from_atomic, perturb_frame)
from .maps import (LipEstimate, MapHandle, affine, componentwise, composite, custom, evaluate,
                   exact_inverse, exact_lipschitz, identity, linear_functional, lip_estimate,
                   lip_exact_affine, translate_to_origin)
from .perturb import *  # noqa: F401,F403
from .perturb import __all__ as _perturb_all
from .sampling import SamplerConfig, sample_points
from .spaces import INF, NormedSpace, Vector, distance, lp, norm, seq_embed

__version__ = "0.1.0"

__all__ = [
    "AtomicDecomposition", "DilationResult", "SchauderReport", "ValidationReport",
    "basis_decomposition", "check_decomposition", "dilate", "graph_embedding",
    "lift_decomposition", "perturb_decomposition", "schauder_check",
    "DegenerateNormError", "DegenerateSampleError", "DomainError", "InconsistentPairError",
    "LipPerturbError", "NonconvergenceError", "NotVerifiableError", "PreconditionError",
    "StructuralError", "UnsupportedConfigurationError",
    "FrameBoundEstimate", "MetricFrame", "analysis", "atomic_from_frame",
    "frame_bounds_estimate", "frame_from_atomic", "perturb_frame",
    "LipEstimate", "MapHandle", "affine", "componentwise", "composite", "custom", "evaluate",
    "exact_inverse", "exact_lipschitz", "identity", "linear_functional", "lip_estimate",
    "lip_exact_affine", "translate_to_origin",
    "SamplerConfig", "sample_points", "INF", "NormedSpace", "Vector", "distance", "lp", "norm",
    "seq_embed", *_perturb_all,
]
