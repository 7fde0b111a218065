"""Seeded point and pair sampling.

Everything downstream that talks about "the sample" draws it from here, so
a (count, seed, radius, scheme) tuple pins the sample bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateSampleError

SCHEMES = ("uniform-box", "gaussian", "grid")


@dataclass(frozen=True)
class SamplerConfig:
    count: int = 40
    seed: int = 0
    radius: float = 1.0
    scheme: str = "uniform-box"
    pair_budget: int = 20000

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown sampling scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.count < 2:
            raise DegenerateSampleError("a sampler needs at least 2 points")

    def with_seed(self, seed: int) -> "SamplerConfig":
        return SamplerConfig(self.count, int(seed), self.radius, self.scheme, self.pair_budget)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerConfig":
        return cls(**d)


def sample_points(dim: int, cfg: SamplerConfig, center: np.ndarray | None = None) -> np.ndarray:
    """Return a ``(cfg.count, dim)`` array of sample points."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.scheme == "uniform-box":
        X = rng.uniform(-cfg.radius, cfg.radius, size=(cfg.count, dim))
    elif cfg.scheme == "gaussian":
        X = cfg.radius * rng.standard_normal((cfg.count, dim))
    else:
        k = max(2, math.ceil(cfg.count ** (1.0 / dim)))
        axis = np.linspace(-cfg.radius, cfg.radius, k)
        mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
        X = mesh[: cfg.count]
    if center is not None:
        X = X + np.asarray(center, dtype=float)
    return X


def pair_indices(count: int, cfg: SamplerConfig) -> tuple[np.ndarray, np.ndarray]:
    """All ``i < j`` pairs, or a seeded subsample of ``cfg.pair_budget`` of them."""
    i, j = np.triu_indices(count, k=1)
    if i.size > cfg.pair_budget:
        rng = np.random.default_rng([cfg.seed, 0x5A17])
        keep = np.sort(rng.choice(i.size, size=cfg.pair_budget, replace=False))
        i, j = i[keep], j[keep]
    return i, j
