"""Synthetic union-of-subspaces benchmark generator.

Each cluster j draws a basis factor (similarity * shared + own) and random
codes, so ``similarity`` controls how close pairwise subspaces are.  Dense
noise, sparse corruption, and a missing mask are layered on top, all scaled
by the standard deviation of the clean data.  Columns are NOT normalized
here; the fitting pipeline normalizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidConfigError
from .types import DataMatrix


@dataclass(frozen=True)
class SynthConfig:
    k: int = 5
    ambient_dim: int = 25
    subspace_dim: int = 5
    per_cluster: int = 50
    similarity: float = 1.0
    noise_level: float = 0.0
    sparse_density: float = 0.0
    missing_rate: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.k < 1:
            raise InvalidConfigError("k must be a positive integer")
        if self.subspace_dim < 1 or self.subspace_dim >= self.ambient_dim:
            raise InvalidConfigError("subspace_dim must lie in [1, ambient_dim)")
        if self.per_cluster < 1:
            raise InvalidConfigError("per_cluster must be a positive integer")
        if self.similarity < 0 or self.noise_level < 0:
            raise InvalidConfigError("similarity and noise_level must be nonnegative")
        if not 0.0 <= self.sparse_density <= 1.0:
            raise InvalidConfigError("sparse_density must lie in [0, 1]")
        if not 0.0 <= self.missing_rate < 1.0:
            raise InvalidConfigError("missing_rate must lie in [0, 1)")


def generate(cfg: SynthConfig):
    """Draw one benchmark instance.

    Returns ``(data, labels, clean)`` where ``data`` carries a mask iff
    ``missing_rate > 0``, ``labels`` are the 1-based generative assignments
    (per_cluster copies of each cluster index in order), and ``clean`` is the
    noise-free matrix.  Deterministic given ``cfg.seed``.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    m, d0, n0, k = cfg.ambient_dim, cfg.subspace_dim, cfg.per_cluster, cfg.k
    n = k * n0

    shared = rng.standard_normal((m, d0))
    blocks = []
    for _ in range(k):
        basis = cfg.similarity * shared + rng.standard_normal((m, d0))
        codes = rng.standard_normal((d0, n0))
        blocks.append(basis @ codes)
    clean = np.hstack(blocks)
    sigma = float(clean.std())

    noisy = clean.copy()
    if cfg.noise_level > 0:
        noisy += rng.standard_normal((m, n)) * (cfg.noise_level * sigma)
    if cfg.sparse_density > 0:
        nnz = int(round(cfg.sparse_density * m * n))
        if nnz > 0:
            support = rng.choice(m * n, size=nnz, replace=False)
            noisy.flat[support] += rng.standard_normal(nnz) * sigma

    mask = None
    if cfg.missing_rate > 0:
        observed = rng.random((m, n)) >= cfg.missing_rate
        for i in range(n):
            while not observed[:, i].any():
                observed[:, i] = rng.random(m) >= cfg.missing_rate
        mask = observed.astype(np.float64)

    labels = np.repeat(np.arange(1, k + 1, dtype=np.int64), n0)
    return DataMatrix(noisy, mask=mask), labels, clean
