"""Clustering metrics (accuracy under optimal matching, NMI) and the k-plane
clustering baseline."""

from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import InvalidParamsError, LengthMismatchError
from .initialization import init_dictionary_kmeans
from .types import DataMatrix, check_labels

logger = logging.getLogger(__name__)

MAX_ALPHABET = 64


def _contingency(pred: np.ndarray, truth: np.ndarray):
    up, pi = np.unique(pred, return_inverse=True)
    ut, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((up.size, ut.size))
    np.add.at(table, (pi, ti), 1.0)
    return table


def clustering_accuracy(pred, truth) -> float:
    """Fraction of agreeing samples under the best one-to-one label matching.

    Rectangular label alphabets are allowed; the optimal matching is found by
    an assignment solver on the contingency table.
    """
    pred = check_labels(pred, "pred")
    truth = check_labels(truth, "truth")
    if pred.size != truth.size:
        raise LengthMismatchError(
            f"pred has {pred.size} labels but truth has {truth.size}"
        )
    table = _contingency(pred, truth)
    if max(table.shape) > MAX_ALPHABET:
        raise InvalidParamsError(f"label alphabets above {MAX_ALPHABET} are not supported")
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / pred.size)


def nmi(pred, truth) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies.

    When both partitions are trivial (one cluster each) they are identical
    and the value is defined as 1.
    """
    pred = check_labels(pred, "pred")
    truth = check_labels(truth, "truth")
    if pred.size != truth.size:
        raise LengthMismatchError(
            f"pred has {pred.size} labels but truth has {truth.size}"
        )
    table = _contingency(pred, truth)
    joint = table / pred.size
    pp = joint.sum(axis=1)
    pt = joint.sum(axis=0)
    hp = -float(np.sum(pp * np.log(pp, where=pp > 0, out=np.zeros_like(pp))))
    ht = -float(np.sum(pt * np.log(pt, where=pt > 0, out=np.zeros_like(pt))))
    if hp == 0.0 and ht == 0.0:
        return 1.0
    outer = np.outer(pp, pt)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))
    value = mi / ((hp + ht) / 2.0)
    return float(min(max(value, 0.0), 1.0))


def _orthonormal_random(m: int, d: int, rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((m, d)))
    return q[:, :d]


def kpc_fit(
    X: DataMatrix,
    k: int,
    d: int,
    max_iters: int = 100,
    seed: int = 0,
    init: str = "kmeans",
    kmeans_reps: int = 10,
) -> np.ndarray:
    """k-plane clustering: assign to nearest subspace, refit bases by PCA.

    Bases start from the spherical-k-means dictionary initialization (or
    orthonormalized random bases).  Stops when assignments no longer change
    or after ``max_iters``; ties go to the lower index.  Empty clusters are
    reseeded from a random column (logged).  Labels are 1-based.
    """
    if not X.column_normalized:
        raise InvalidParamsError("kpc_fit expects column-normalized data")
    if d > X.m:
        raise InvalidParamsError("subspace dimension d cannot exceed the ambient dimension")
    if d == X.m:
        warnings.warn(
            "d equals the ambient dimension: every subspace reconstructs "
            "everything and assignment degenerates to the first cluster"
        )
    rng = np.random.default_rng(seed)
    Xv = X.observed_values()
    if init == "kmeans":
        block = init_dictionary_kmeans(X, k, d, reps=kmeans_reps, seed=seed)
        bases = [block.block(j).copy() for j in range(k)]
    elif init == "random":
        bases = [_orthonormal_random(X.m, d, rng) for _ in range(k)]
    else:
        raise InvalidParamsError(f"unknown init {init!r}")

    col_sq = np.sum(Xv * Xv, axis=0)
    labels = None
    for _ in range(max_iters):
        residuals = np.empty((k, X.n))
        for j, U in enumerate(bases):
            proj = U.T @ Xv
            residuals[j] = col_sq - np.sum(proj * proj, axis=0)
        new_labels = np.argmin(residuals, axis=0)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = Xv[:, labels == j]
            if members.shape[1] == 0:
                logger.info("k-plane cluster %d went empty; reseeding from a random column", j)
                seed_col = Xv[:, rng.integers(X.n)][:, None]
                extra = rng.standard_normal((X.m, d - 1)) if d > 1 else np.empty((X.m, 0))
                q, _ = np.linalg.qr(np.hstack([seed_col, extra]))
                bases[j] = q[:, :d]
                continue
            U = np.linalg.svd(members, full_matrices=False)[0]
            bases[j] = U[:, : min(d, U.shape[1])]
    return labels.astype(np.int64) + 1
