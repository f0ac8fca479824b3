"""Dictionary initialization: spherical k-means and per-cluster SVD bases.

The spherical k-means routine doubles as the landmark generator and as a
clustering baseline.  All routines are pure functions of (inputs, seed).
"""

from __future__ import annotations

import numpy as np

from .exceptions import EmptyClusterError, InvalidParamsError
from .types import DataMatrix, Dictionary
from .ops import project_unit_columns

_LLOYD_MAX_ITERS = 100


def _lloyd(Xv: np.ndarray, k: int, max_iters: int, rng: np.random.Generator):
    """One restart of Lloyd iterations under the 1 - cos distance.

    ``Xv`` must have unit-norm columns.  Returns (labels0, centers, objective,
    objective_trace); labels are 0-based here.
    """
    n = Xv.shape[1]
    centers = Xv[:, rng.choice(n, size=k, replace=False)].copy()
    labels = None
    trace = []
    for _ in range(max_iters):
        sims = centers.T @ Xv  # cosine similarities, both sides unit norm
        new_labels = np.argmax(sims, axis=0)
        reseeded = False
        for j in range(k):
            if not np.any(new_labels == j):
                # empty cluster: move its center to the farthest point
                centers[:, j] = Xv[:, int(np.argmin(sims[j]))]
                reseeded = True
        if reseeded:
            sims = centers.T @ Xv
            new_labels = np.argmax(sims, axis=0)
        if labels is not None and not reseeded and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = Xv[:, labels == j]
            if members.shape[1] == 0:
                continue
            mean = members.mean(axis=1)
            nrm = np.linalg.norm(mean)
            if nrm < 1e-300:
                # members cancel out; reseed from the farthest point
                centers[:, j] = Xv[:, int(np.argmin(sims[j]))]
            else:
                centers[:, j] = mean / nrm
        trace.append(float(np.sum(1.0 - np.einsum("ij,ij->j", centers[:, labels], Xv))))
    objective = float(np.sum(1.0 - np.einsum("ij,ij->j", centers[:, labels], Xv)))
    return labels, centers, objective, trace


def _best_lloyd(Xv: np.ndarray, k: int, reps: int, max_iters: int, rng):
    best = None
    for _ in range(reps):
        labels, centers, obj, _ = _lloyd(Xv, k, max_iters, rng)
        # strict comparison: the earliest restart wins ties
        if best is None or obj < best[0]:
            best = (obj, labels, centers)
    return best[1], best[2], best[0]


def spherical_kmeans(
    X: DataMatrix,
    k: int,
    reps: int = 10,
    max_iters: int = _LLOYD_MAX_ITERS,
    seed: int = 0,
):
    """Best-of-``reps`` spherical k-means on column-normalized data.

    Returns (labels, centers) with 1-based labels and unit-norm centers
    (m, k).  Raises :class:`EmptyClusterError` when n < k.
    """
    if not X.column_normalized:
        raise InvalidParamsError("spherical_kmeans expects column-normalized data")
    if reps < 1 or max_iters < 1:
        raise InvalidParamsError("reps and max_iters must be positive")
    if X.n < k:
        raise EmptyClusterError(f"cannot form {k} clusters from {X.n} samples")
    rng = np.random.default_rng(seed)
    labels, centers, _ = _best_lloyd(X.observed_values(), k, reps, max_iters, rng)
    return labels.astype(np.int64) + 1, centers


def _pad_block(U: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
    """Pad an orthonormal block up to width d with unit-norm random columns.

    New columns are orthogonalized against the existing ones while the
    ambient dimension allows it.
    """
    m = U.shape[0]
    cols = [U] if U.size else []
    width = U.shape[1]
    while width < d:
        v = rng.standard_normal(m)
        if width < m and cols:
            basis = np.hstack(cols)
            v = v - basis @ (basis.T @ v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-8:
            continue
        cols.append((v / nrm)[:, None])
        width += 1
    return np.hstack(cols) if len(cols) > 1 else cols[0]


def init_dictionary_kmeans(
    X: DataMatrix,
    k: int,
    d: int,
    reps: int = 10,
    seed: int = 0,
    subset: int | None = None,
) -> Dictionary:
    """Initialize blocks from the SVD of columns nearest each k-means center.

    For every center the ``d`` closest cluster members (cosine distance) form
    an (m, d) matrix whose left singular vectors become the block.  Clusters
    with fewer than ``d`` members contribute all their points and the block
    is padded with unit-norm random columns.  ``subset`` restricts k-means
    and the selection pool to that many uniformly drawn columns.
    """
    if not X.column_normalized:
        raise InvalidParamsError("init_dictionary_kmeans expects column-normalized data")
    rng = np.random.default_rng(seed)
    Xv = X.observed_values()
    if subset is not None and subset < X.n:
        if subset < k:
            raise InvalidParamsError("subset must be at least k")
        pool = Xv[:, rng.choice(X.n, size=subset, replace=False)]
    else:
        pool = Xv
    if pool.shape[1] < k:
        raise EmptyClusterError(f"cannot form {k} clusters from {pool.shape[1]} samples")
    labels, centers, _ = _best_lloyd(pool, k, reps, _LLOYD_MAX_ITERS, rng)
    blocks = []
    for j in range(k):
        members = pool[:, labels == j]
        sims = centers[:, j] @ members
        order = np.argsort(1.0 - sims, kind="stable")
        chosen = members[:, order[: min(d, members.shape[1])]]
        U = np.linalg.svd(chosen, full_matrices=False)[0]
        U = U[:, : min(d, U.shape[1])]
        if U.shape[1] < d:
            U = _pad_block(U, d, rng)
        blocks.append(U)
    return Dictionary.from_blocks(blocks)


def init_dictionary_random(m: int, k: int, d: int, seed: int = 0) -> Dictionary:
    """Standard-normal blocks projected column-wise onto the unit ball."""
    if m < 1 or k < 1 or d < 1:
        raise InvalidParamsError("m, k, d must be positive integers")
    rng = np.random.default_rng(seed)
    stacked = project_unit_columns(rng.standard_normal((m, k * d)))
    return Dictionary(stacked, k=k, d=d)
