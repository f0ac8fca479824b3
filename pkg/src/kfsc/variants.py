"""Solver variants: mini-batch passes, landmark compression for very large n,
sparse-noise separation, and masked fitting with imputation."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import AmbiguousSupportError, InvalidParamsError
from .initialization import spherical_kmeans
from .ops import (
    assign_by_residual,
    assign_by_support,
    estimate_lambda,
    group_soft_threshold,
    normalize_columns,
    objective,
    residual_table,
    ridge_codes,
)
from .solver import (
    _alternate,
    _assign_labels,
    _initial_dictionary,
    _rel_change,
    fit,
    peak_element_count,
    update_c_gauss_seidel,
    update_c_jacobi,
    update_d_pgd,
)
from .types import (
    Coefficients,
    DataMatrix,
    Dictionary,
    FitResult,
    HyperParams,
    SolverState,
)

logger = logging.getLogger(__name__)


@dataclass
class MiniBatchParams:
    """Mini-batch schedule: batch size, per-batch code sweeps and dictionary
    steps, number of passes over the data, and an optional shuffle seed
    (``None`` keeps the sequential column order)."""

    batch_size: int
    c_passes: int = 5
    d_steps: int = 5
    epochs: int = 1
    shuffle_seed: int | None = None

    def validate(self, n: int) -> None:
        if self.batch_size < 1 or self.batch_size > n:
            raise InvalidParamsError(f"batch_size must be in [1, {n}]")
        if self.c_passes < 1 or self.d_steps < 1:
            raise InvalidParamsError("c_passes and d_steps must be positive")
        if self.epochs < 1:
            raise InvalidParamsError("epochs must be a positive integer")


@dataclass
class LandmarkParams:
    """Landmark compression: number of k-means centers standing in for the
    data, restarts for that k-means, and its seed."""

    landmark_count: int
    kmeans_reps: int = 100
    seed: int = 0

    def validate(self, k: int, n: int) -> None:
        if not k <= self.landmark_count <= n:
            raise InvalidParamsError(
                f"landmark_count must lie in [k={k}, n={n}]"
            )
        if self.kmeans_reps < 1:
            raise InvalidParamsError("kmeans_reps must be positive")


@dataclass
class RobustParams:
    """Sparse-noise term: proximal weight and the norm shaping the noise
    (elementwise l1 or column-wise l2,1)."""

    noise_weight: float = 0.15
    noise_norm: str = "l1"

    def validate(self) -> None:
        if not self.noise_weight > 0:
            raise InvalidParamsError("noise_weight must be positive")
        if self.noise_norm not in ("l1", "l21"):
            raise InvalidParamsError(f"unknown noise_norm {self.noise_norm!r}")


def _soft_threshold_elementwise(v: np.ndarray, u: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - u, 0.0)


def _noise_penalty(E: np.ndarray, rp: RobustParams) -> float:
    if rp.noise_norm == "l1":
        return float(np.abs(E).sum())
    return float(np.linalg.norm(E, axis=0).sum())


def _shrink_noise(R: np.ndarray, rp: RobustParams) -> np.ndarray:
    if rp.noise_norm == "l1":
        return _soft_threshold_elementwise(R, rp.noise_weight)
    return group_soft_threshold(R, rp.noise_weight)


def _batch_slices(n: int, b: int, epoch: int, shuffle_seed: int | None):
    """Column index blocks of size b covering [0, n) exactly once."""
    if shuffle_seed is None:
        order = np.arange(n)
    else:
        order = np.random.default_rng(shuffle_seed + epoch).permutation(n)
    return [order[i : i + b] for i in range(0, n, b)]


def fit_minibatch(
    X: DataMatrix,
    params: HyperParams,
    mb: MiniBatchParams,
    batch_callback=None,
) -> FitResult:
    """Fit by repeated passes over column batches.

    The dictionary is initialized once; each batch visit runs ``c_passes``
    Gauss-Seidel sweeps on that batch's codes (extrapolation state reset per
    visit) followed by ``d_steps`` projected gradient steps on the dictionary
    using only the batch.  Batch codes are seeded by a joint ridge solve on
    the first pass and warm-started from the stored codes on later passes.
    Final codes and labels come from a per-block ridge pass over all of X
    with the residual rule.  ``batch_callback(epoch, batch_index, columns,
    D, C_batch)`` is invoked after each batch when given.
    """
    params.validate()
    if X.mask is not None:
        raise InvalidParamsError("fit_minibatch does not accept masked data")
    Xn = X if X.column_normalized else normalize_columns(X)
    mb.validate(Xn.n)
    k, d = params.k, params.d

    D = _initial_dictionary(Xn, params)
    lam = params.lam if params.lam is not None else estimate_lambda(Xn, D)
    resolved = replace(params, lam=lam)

    codes_store = np.zeros((k * d, Xn.n))
    state = SolverState()
    seconds = []
    n_batches = 0
    for epoch in range(mb.epochs):
        for batch_index, cols in enumerate(_batch_slices(Xn.n, mb.batch_size, epoch, mb.shuffle_seed)):
            tic = time.perf_counter()
            Xb = DataMatrix(Xn.values[:, cols], column_normalized=True)
            if epoch == 0:
                Cb = ridge_codes(Xb, D, params.ridge_small, joint=True)
            else:
                Cb = Coefficients(codes_store[:, cols], k=k, d=d)
            batch_state = SolverState()
            c_before = Cb.stacked
            for _ in range(mb.c_passes):
                Cb, batch_state = update_c_gauss_seidel(Xb, D, Cb, batch_state, resolved)
            D_prev = D
            D = update_d_pgd(Xb, Cb, D, mb.d_steps)
            codes_store[:, cols] = Cb.stacked
            state.rel_change_trace.append(
                (_rel_change(c_before, Cb.stacked), _rel_change(D_prev.stacked, D.stacked))
            )
            state.objective_trace.append(objective(Xb, D, Cb, lam))
            seconds.append(time.perf_counter() - tic)
            n_batches += 1
            if batch_callback is not None:
                batch_callback(epoch, batch_index, cols, D, Cb)
    state.iter = n_batches

    # stability diagnostic: one extra full-data sweep, logged only
    full_state = SolverState()
    C_full = Coefficients(codes_store, k=k, d=d)
    C_check, _ = update_c_gauss_seidel(Xn, D, C_full, full_state, resolved)
    full_change = float(np.linalg.norm(C_check.stacked - codes_store))
    last_batch_change = state.rel_change_trace[-1][0] if state.rel_change_trace else 0.0
    logger.info(
        "mini-batch stability: full-data sweep moved codes by %.3e "
        "(last batch relative change %.3e)",
        full_change,
        last_batch_change,
    )

    residuals, codes = residual_table(Xn, D, params.ridge_small)
    labels = np.argmin(residuals, axis=0).astype(np.int64) + 1
    peak = peak_element_count(Xn.m, Xn.n, k, d, masked=False, extra=k * d * Xn.n)
    return FitResult(
        labels=labels,
        dictionary=D,
        codes=codes,
        state=state,
        seconds_per_iter=seconds,
        lam=lam,
        label_rule="residual",
        peak_elements=peak,
    )


def fit_landmark(X: DataMatrix, params: HyperParams, lm: LandmarkParams) -> FitResult:
    """Fit on spherical k-means centers, then label all columns out of sample.

    The ``landmark_count`` unit-normalized centers form a small surrogate
    dataset for the batch solver; every column of ``X`` is then assigned by
    the residual rule under the learned dictionary.
    """
    params.validate()
    if X.mask is not None:
        raise InvalidParamsError("fit_landmark does not accept masked data")
    Xn = X if X.column_normalized else normalize_columns(X)
    lm.validate(params.k, Xn.n)

    _, centers = spherical_kmeans(
        Xn, lm.landmark_count, reps=lm.kmeans_reps, seed=lm.seed
    )
    landmarks = normalize_columns(DataMatrix(centers))
    inner = fit(landmarks, params)

    residuals, codes = residual_table(Xn, inner.dictionary, params.ridge_small)
    labels = np.argmin(residuals, axis=0).astype(np.int64) + 1
    # high-water memory: the landmark solve scales with s; only the input,
    # the final ridge codes, and the labels scale with n
    peak = inner.peak_elements + Xn.m * Xn.n + params.k * params.d * Xn.n + Xn.n
    return FitResult(
        labels=labels,
        dictionary=inner.dictionary,
        codes=codes,
        state=inner.state,
        seconds_per_iter=inner.seconds_per_iter,
        lam=inner.lam,
        label_rule="residual",
        peak_elements=peak,
    )


def fit_robust_sparse(X: DataMatrix, params: HyperParams, rp: RobustParams):
    """Fit with an explicit sparse-noise term split from the data.

    Alternates the code update and dictionary update on X - E with an exact
    proximal update of E (elementwise soft-threshold for l1, column-wise
    group soft-threshold for l2,1).  Returns ``(result, E)``; the traced
    objective adds ``noise_weight`` times the noise penalty.
    """
    params.validate()
    rp.validate()
    if X.mask is not None:
        raise InvalidParamsError("fit_robust_sparse does not accept masked data")
    Xn = X if X.column_normalized else normalize_columns(X)

    D = _initial_dictionary(Xn, params)
    lam = params.lam if params.lam is not None else estimate_lambda(Xn, D)
    resolved = replace(params, lam=lam)
    C = ridge_codes(Xn, D, params.ridge_small, joint=True)
    E = np.zeros_like(Xn.values)

    state = SolverState()
    seconds = []
    gauss_seidel = params.c_solver == "gauss-seidel"
    for t in range(1, params.max_iters + 1):
        tic = time.perf_counter()
        clean = DataMatrix(Xn.values - E)
        C_prev, D_prev = C, D
        if gauss_seidel:
            C, state = update_c_gauss_seidel(clean, D, C_prev, state, resolved)
        else:
            C = update_c_jacobi(clean, D, C_prev, resolved)
            state.iter = t
        D = update_d_pgd(clean, C, D_prev, params.inner_d_steps)
        E = _shrink_noise(Xn.values - D.stacked @ C.stacked, rp)
        rel_c = _rel_change(C_prev.stacked, C.stacked)
        rel_d = _rel_change(D_prev.stacked, D.stacked)
        state.rel_change_trace.append((rel_c, rel_d))
        state.objective_trace.append(
            objective(DataMatrix(Xn.values - E), D, C, lam)
            + rp.noise_weight * _noise_penalty(E, rp)
        )
        seconds.append(time.perf_counter() - tic)
        if max(rel_c, rel_d) <= params.tol:
            break

    labels, rule = _assign_labels(DataMatrix(Xn.values - E), D, C, params.ridge_small)
    peak = peak_element_count(
        Xn.m, Xn.n, params.k, params.d, masked=False, extra=2 * Xn.m * Xn.n
    )
    result = FitResult(
        labels=labels,
        dictionary=D,
        codes=C,
        state=state,
        seconds_per_iter=seconds,
        lam=lam,
        label_rule=rule,
        peak_elements=peak,
    )
    return result, E


def fit_missing(X: DataMatrix, params: HyperParams):
    """Fit on partially observed data and impute the missing entries.

    Code and dictionary gradients are restricted to observed entries while
    the step constants keep their unmasked bounds (masking is a contraction).
    Returns ``(result, X_imputed)`` where the imputation equals ``X`` exactly
    on observed entries and the reconstruction ``DC`` (rescaled to the input
    column norms) elsewhere.  An all-ones mask reduces exactly to :func:`fit`.
    """
    params.validate()
    if X.mask is None:
        raise InvalidParamsError("fit_missing requires a mask")
    if np.all(X.mask == 1.0):
        result = fit(DataMatrix(X.values, column_normalized=X.column_normalized), params)
        return result, X.values.copy()

    Xn = normalize_columns(X)
    norms = X.column_norms()
    mask = Xn.mask
    zero_filled = Xn.values * mask
    Xwork = DataMatrix(zero_filled, mask=mask, column_normalized=True)
    Xinit = DataMatrix(zero_filled, column_normalized=True)

    D0 = _initial_dictionary(Xinit, params)
    lam = params.lam if params.lam is not None else estimate_lambda(Xinit, D0)
    resolved = replace(params, lam=lam)
    C0 = ridge_codes(Xinit, D0, params.ridge_small, joint=True)

    result = _alternate(Xwork, D0, C0, resolved, peak_extra=Xn.m * Xn.n)

    recon = result.dictionary.stacked @ result.codes.stacked
    imputed_normalized = mask * zero_filled + (1.0 - mask) * recon
    try:
        result.labels = assign_by_support(result.codes)
        result.label_rule = "support"
    except AmbiguousSupportError:
        completed = DataMatrix(imputed_normalized)
        result.labels = assign_by_residual(completed, result.dictionary, params.ridge_small)
        result.label_rule = "residual"

    X_imputed = mask * X.values + (1.0 - mask) * (recon * norms[None, :])
    return result, X_imputed
