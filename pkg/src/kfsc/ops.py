"""Closed-form primitives shared by every solver.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .exceptions import (
    AmbiguousSupportError,
    EmptyColumnObservationError,
    NeedTwoBlocksError,
    ShapeMismatchError,
    ZeroColumnError,
)
from .types import Coefficients, DataMatrix, Dictionary, SUPPORT_TOL

# Norms below this are treated as exactly zero when normalizing columns.
ZERO_NORM = 1e-300

# Columns longer than 1 + this are rescaled by the unit-ball projection; the
# dead zone keeps the projection exactly idempotent under round-off.
PROJECTION_TOL = 1e-12

_TINY = np.finfo(np.float64).tiny


def normalize_columns(X: DataMatrix) -> DataMatrix:
    """Rescale every column of ``X`` to unit Euclidean norm.

    With a mask present, norms are computed over observed entries only.
    Raises :class:`ZeroColumnError` on a (numerically) zero column and
    :class:`EmptyColumnObservationError` on a fully unobserved column.
    """
    if X.mask is not None:
        observed_per_col = X.mask.sum(axis=0)
        if np.any(observed_per_col == 0):
            raise EmptyColumnObservationError(int(np.argmin(observed_per_col)))
    norms = X.column_norms()
    below = norms < ZERO_NORM
    if np.any(below):
        raise ZeroColumnError(int(np.argmax(below)))
    return DataMatrix(X.values / norms, mask=X.mask, column_normalized=True)


def group_soft_threshold(v: np.ndarray, u: float) -> np.ndarray:
    """Shrink the Euclidean norm of ``v`` by ``u``, column-wise for matrices.

    Returns ((norm - u) / norm) * v when norm > u and the zero vector
    otherwise; this is the proximal map of ``u * ||.||``.
    """
    if u < 0:
        raise ValueError("threshold must be nonnegative")
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 1:
        nrm = np.linalg.norm(arr)
        if nrm > u:
            return arr * (1.0 - u / nrm)
        return np.zeros_like(arr)
    norms = np.linalg.norm(arr, axis=0)
    scale = np.maximum(1.0 - u / np.maximum(norms, _TINY), 0.0)
    return arr * scale


def blockwise_soft_threshold(stacked: np.ndarray, k: int, u) -> np.ndarray:
    """Apply the group soft-threshold per block of a (k*d, n) stack.

    ``u`` may be a scalar or a (k,) array of per-block thresholds.
    """
    kd, n = stacked.shape
    d = kd // k
    u = np.broadcast_to(np.asarray(u, dtype=np.float64), (k,))
    view = stacked.reshape(k, d, n)
    norms = np.linalg.norm(view, axis=1)  # (k, n)
    scale = np.maximum(1.0 - u[:, None] / np.maximum(norms, _TINY), 0.0)
    return (view * scale[:, None, :]).reshape(kd, n)


def project_unit_columns(D: np.ndarray) -> np.ndarray:
    """Project every column of ``D`` onto the closed unit ball.

    Columns within the feasibility tolerance of the ball are returned
    unchanged so the projection is exactly idempotent.
    """
    arr = np.asarray(D, dtype=np.float64)
    norms = np.linalg.norm(arr, axis=0)
    over = norms > 1.0 + PROJECTION_TOL
    if not np.any(over):
        return arr.copy()
    scale = np.where(over, 1.0 / np.maximum(norms, _TINY), 1.0)
    return arr * scale


def objective(X: DataMatrix, D: Dictionary, C: Coefficients, lam: float) -> float:
    """Evaluate 0.5*||X - DC||_F^2 + lam * sum_j ||C^(j)||_{2,1}.

    When ``X`` carries a mask the residual is restricted to observed entries.
    """
    if D.m != X.m or C.n != X.n or C.stacked.shape[0] != D.stacked.shape[1]:
        raise ShapeMismatchError(
            f"inconsistent shapes: X {X.values.shape}, D {D.stacked.shape}, "
            f"C {C.stacked.shape}"
        )
    residual = X.values - D.stacked @ C.stacked
    if X.mask is not None:
        residual = residual * X.mask
    return 0.5 * float(np.vdot(residual, residual)) + lam * float(
        C.group_norms().sum()
    )


def spectral_norm(A: np.ndarray, tol: float = 1e-6, max_iters: int = 100) -> float:
    """Largest singular value of ``A`` by power iteration on the smaller Gram.

    Deterministic (fixed-seed start vector); the zero matrix returns 0.
    """
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.size == 0 or not np.any(arr):
        return 0.0
    if arr.shape[0] <= arr.shape[1]:
        gram = arr @ arr.T
    else:
        gram = arr.T @ arr
    rng = np.random.default_rng(0)
    v = rng.standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(max_iters):
        w = gram @ v
        lam = float(np.linalg.norm(w))
        if lam <= _TINY:
            # start vector landed in the null space; retry once
            v = rng.standard_normal(gram.shape[0])
            nrm = np.linalg.norm(v)
            if nrm <= _TINY:
                return 0.0
            v = v / nrm
            lam_prev = 0.0
            continue
        v = w / lam
        if abs(lam - lam_prev) <= tol * lam:
            lam_prev = lam
            break
        lam_prev = lam
    return float(np.sqrt(lam_prev))


def ridge_codes(
    X: DataMatrix, D: Dictionary, ridge: float, joint: bool = False
) -> Coefficients:
    """Exact ridge-regularized least-squares codes for ``X`` against ``D``.

    ``joint=False`` solves k independent (d, d) systems
    (D_j^T D_j + ridge I) C_j = D_j^T X; ``joint=True`` solves the single
    stacked (k*d, k*d) system.
    """
    if ridge <= 0:
        raise ValueError("ridge must be positive")
    if D.m != X.m:
        raise ShapeMismatchError(
            f"X has {X.m} rows but dictionary blocks have {D.m}"
        )
    Xv = X.values
    if joint:
        Dst = D.stacked
        gram = Dst.T @ Dst + ridge * np.eye(Dst.shape[1])
        codes = scipy.linalg.solve(gram, Dst.T @ Xv, assume_a="pos")
        return Coefficients(codes, k=D.k, d=D.d)
    blocks = []
    eye = ridge * np.eye(D.d)
    for j in range(D.k):
        Dj = D.block(j)
        blocks.append(scipy.linalg.solve(Dj.T @ Dj + eye, Dj.T @ Xv, assume_a="pos"))
    return Coefficients.from_blocks(blocks)


def block_scores(X: DataMatrix, D: Dictionary) -> np.ndarray:
    """Per-block correlation scores ||D_j^T x_i||, shape (k, n)."""
    if D.m != X.m:
        raise ShapeMismatchError(
            f"X has {X.m} rows but dictionary blocks have {D.m}"
        )
    proj = D.stacked.T @ X.values  # (k*d, n)
    return np.linalg.norm(proj.reshape(D.k, D.d, -1), axis=1)


def estimate_lambda(X: DataMatrix, D0: Dictionary) -> float:
    """Group-sparsity weight from the best/second-best block score gap.

    Assumes ``X`` is column-normalized.  For each column the best and
    second-best blocks by ||D0_j^T x_i|| are found (ties to the lower block
    index); the returned weight is
    (max_i second_best_i + min_i best_i) / 2.
    """
    if D0.k < 2:
        raise NeedTwoBlocksError("need at least two blocks to rank a second best")
    scores = block_scores(X, D0)
    best_idx = np.argmax(scores, axis=0)
    cols = np.arange(scores.shape[1])
    best = scores[best_idx, cols]
    rest = scores.copy()
    rest[best_idx, cols] = -np.inf
    second = rest.max(axis=0)
    return float((second.max() + best.min()) / 2.0)


def assign_by_support(C: Coefficients, tol: float = SUPPORT_TOL) -> np.ndarray:
    """Label each column by its unique nonzero block (1-based).

    Raises :class:`AmbiguousSupportError` as soon as a column has zero or
    several nonzero blocks; callers then fall back to the residual rule.
    """
    norms = C.group_norms()
    nonzero = norms > tol
    counts = nonzero.sum(axis=0)
    bad = counts != 1
    if np.any(bad):
        i = int(np.argmax(bad))
        raise AmbiguousSupportError(i, int(counts[i]))
    return np.argmax(nonzero, axis=0).astype(np.int64) + 1


def residual_table(X: DataMatrix, D: Dictionary, ridge: float):
    """Per-block ridge codes and squared reconstruction errors.

    Returns ``(residuals, codes)`` where ``residuals`` has shape (k, n) with
    residuals[j, i] = ||x_i - D_j chat_j[:, i]||^2.
    """
    codes = ridge_codes(X, D, ridge, joint=False)
    Xv = X.values
    residuals = np.empty((D.k, X.n))
    for j in range(D.k):
        diff = Xv - D.block(j) @ codes.block(j)
        residuals[j] = np.sum(diff * diff, axis=0)
    return residuals, codes


def assign_by_residual(X: DataMatrix, D: Dictionary, ridge: float) -> np.ndarray:
    """Label each column by the block with the least ridge reconstruction error.

    Ties break toward the lower block index; labels are 1-based.
    """
    residuals, _ = residual_table(X, D, ridge)
    return np.argmin(residuals, axis=0).astype(np.int64) + 1
