"""Batch optimizer: extrapolated block coordinate descent for the codes and
projected gradient steps for the dictionary, alternated under a relative
change stopping rule."""

from __future__ import annotations

import time
import warnings
from dataclasses import replace

import numpy as np

from .exceptions import AmbiguousSupportError, DegenerateBlockWarning, InvalidParamsError
from .initialization import init_dictionary_kmeans, init_dictionary_random
from .ops import (
    assign_by_residual,
    assign_by_support,
    blockwise_soft_threshold,
    estimate_lambda,
    group_soft_threshold,
    normalize_columns,
    objective,
    project_unit_columns,
    ridge_codes,
    spectral_norm,
)
from .types import Coefficients, DataMatrix, Dictionary, FitResult, HyperParams, SolverState

# Floor applied to per-block step constants when a block is numerically zero.
TAU_FLOOR = 1e-12

# The dictionary update is skipped when ||C C^T||_2 falls below this.
KAPPA_FLOOR = 1e-12

_REL_FLOOR = 1e-300


def coefficient_gradient(Xv, Dst, Cst, mask=None) -> np.ndarray:
    """Gradient of the (masked) quadratic data term with respect to the codes."""
    residual = Xv - Dst @ Cst
    if mask is not None:
        residual = residual * mask
    return -(Dst.T @ residual)


def dictionary_gradient(Xv, Dst, Cst, mask=None) -> np.ndarray:
    """Gradient of the (masked) quadratic data term with respect to the dictionary."""
    residual = Xv - Dst @ Cst
    if mask is not None:
        residual = residual * mask
    return -(residual @ Cst.T)


def _block_step_constants(D: Dictionary, gamma: float) -> np.ndarray:
    """Per-block step constants gamma * ||D_j||_2^2, floored for zero blocks."""
    tau = np.empty(D.k)
    for j in range(D.k):
        s2 = spectral_norm(D.block(j)) ** 2
        if s2 < TAU_FLOOR:
            warnings.warn(
                f"dictionary block {j} is numerically zero; step constant floored",
                DegenerateBlockWarning,
            )
            s2 = TAU_FLOOR
        tau[j] = gamma * s2
    return tau


def update_c_gauss_seidel(
    X: DataMatrix,
    D: Dictionary,
    C_prev: Coefficients,
    state: SolverState,
    params: HyperParams,
):
    """One Gauss-Seidel sweep over the coefficient blocks with extrapolation.

    Step constants for all blocks are computed up front from the current
    dictionary; the extrapolation weight is delta * sqrt(tau_prev / tau) and
    zero on the first two iterations.  The reconstruction residual is kept up
    to date after each block so later blocks see fresh values.  Mutates and
    returns ``state`` alongside the new codes.
    """
    Xv, mask = X.values, X.mask
    k, d = D.k, D.d
    lam = params.lam
    Dst, Cst = D.stacked, C_prev.stacked
    t = state.iter + 1

    tau = _block_step_constants(D, params.gamma)
    if t <= 2 or state.tau_curr is None or state.coeff_delta is None:
        Chat = Cst.copy()
    else:
        eta = params.delta * np.sqrt(state.tau_curr / tau)
        n = Cst.shape[1]
        Chat = Cst - (
            eta[:, None, None] * state.coeff_delta.reshape(k, d, n)
        ).reshape(k * d, n)

    R = Xv - Dst @ Chat
    C_new = Chat.copy()
    for j in range(k):
        sl = slice(j * d, (j + 1) * d)
        Dj = Dst[:, sl]
        G = -(Dj.T @ (R if mask is None else R * mask))
        Cj = group_soft_threshold(Chat[sl] - G / tau[j], lam / tau[j])
        R -= Dj @ (Cj - Chat[sl])
        C_new[sl] = Cj

    state.coeff_delta = Cst - C_new
    state.tau_prev = state.tau_curr
    state.tau_curr = tau
    state.iter = t
    return Coefficients(C_new, k=k, d=d), state


def update_c_jacobi(
    X: DataMatrix, D: Dictionary, C_prev: Coefficients, params: HyperParams
) -> Coefficients:
    """Simultaneous block update from the previous iterate.

    Uses one full gradient and a single step constant gamma * ||D||_2^2 over
    the stacked dictionary, so blocks decouple and may run in any order.
    """
    s2 = spectral_norm(D.stacked) ** 2
    if s2 < TAU_FLOOR:
        warnings.warn(
            "stacked dictionary is numerically zero; step constant floored",
            DegenerateBlockWarning,
        )
        s2 = TAU_FLOOR
    tau = params.gamma * s2
    G = coefficient_gradient(X.values, D.stacked, C_prev.stacked, X.mask)
    V = C_prev.stacked - G / tau
    return Coefficients(
        blockwise_soft_threshold(V, D.k, params.lam / tau), k=D.k, d=D.d
    )


def update_d_pgd(
    X: DataMatrix, C: Coefficients, D_prev: Dictionary, steps: int
) -> Dictionary:
    """Projected gradient steps on the dictionary with step 1/||C C^T||_2.

    Skips the update (returning ``D_prev``) when the codes are numerically
    zero.  With a mask on ``X`` the gradient is recomputed from the masked
    residual each step; the unmasked step constant stays valid because
    entrywise masking is a contraction.
    """
    if steps < 1:
        raise InvalidParamsError("steps must be a positive integer")
    Xv, mask = X.values, X.mask
    Cst = C.stacked
    B = Cst @ Cst.T
    kappa = spectral_norm(B)
    if kappa < KAPPA_FLOOR:
        return D_prev
    Dst = D_prev.stacked
    if mask is None:
        A = Xv @ Cst.T
        for _ in range(steps):
            G = -A + Dst @ B
            Dst = project_unit_columns(Dst - G / kappa)
    else:
        for _ in range(steps):
            G = dictionary_gradient(Xv, Dst, Cst, mask)
            Dst = project_unit_columns(Dst - G / kappa)
    return Dictionary(Dst, k=D_prev.k, d=D_prev.d)


def _rel_change(prev: np.ndarray, new: np.ndarray) -> float:
    num = float(np.linalg.norm(new - prev))
    den = float(np.linalg.norm(prev))
    if den < _REL_FLOOR:
        return 0.0 if num < _REL_FLOOR else np.inf
    return num / den


def _initial_dictionary(Xn: DataMatrix, params: HyperParams) -> Dictionary:
    if params.init == "kmeans":
        return init_dictionary_kmeans(
            Xn, params.k, params.d, reps=params.kmeans_reps, seed=params.seed
        )
    return init_dictionary_random(Xn.m, params.k, params.d, seed=params.seed)


def _assign_labels(X_for_labels: DataMatrix, D: Dictionary, C: Coefficients, ridge: float):
    """Unique-support labels, falling back to the residual rule for all columns."""
    try:
        return assign_by_support(C), "support"
    except AmbiguousSupportError:
        return assign_by_residual(X_for_labels, D, ridge), "residual"


def peak_element_count(m: int, n: int, k: int, d: int, masked: bool, extra: int = 0) -> int:
    """Structural high-water array element count of one alternating solve.

    Counts the persistent arrays: data + residual (+ mask), two dictionary
    copies plus the XC^T product, four code-sized arrays (previous, new,
    extrapolated, step), the (kd, kd) Gram, and the label vector.
    """
    data = m * n * (3 if masked else 2)
    dicts = 3 * k * m * d
    codes = 4 * k * d * n
    gram = (k * d) ** 2
    return data + dicts + codes + gram + n + extra


def _alternate(
    X: DataMatrix,
    D: Dictionary,
    C: Coefficients,
    params: HyperParams,
    label_data: DataMatrix | None = None,
    peak_extra: int = 0,
) -> FitResult:
    """Shared alternating loop; ``params.lam`` must already be resolved."""
    state = SolverState()
    seconds = []
    gauss_seidel = params.c_solver == "gauss-seidel"
    for t in range(1, params.max_iters + 1):
        tic = time.perf_counter()
        C_prev, D_prev = C, D
        if gauss_seidel:
            C, state = update_c_gauss_seidel(X, D, C_prev, state, params)
        else:
            C = update_c_jacobi(X, D, C_prev, params)
            state.iter = t
        D = update_d_pgd(X, C, D_prev, params.inner_d_steps)
        rel_c = _rel_change(C_prev.stacked, C.stacked)
        rel_d = _rel_change(D_prev.stacked, D.stacked)
        state.rel_change_trace.append((rel_c, rel_d))
        state.objective_trace.append(objective(X, D, C, params.lam))
        seconds.append(time.perf_counter() - tic)
        if max(rel_c, rel_d) <= params.tol:
            break
    labels, rule = _assign_labels(label_data if label_data is not None else X, D, C, params.ridge_small)
    peak = peak_element_count(X.m, X.n, params.k, params.d, X.mask is not None, peak_extra)
    return FitResult(
        labels=labels,
        dictionary=D,
        codes=C,
        state=state,
        seconds_per_iter=seconds,
        lam=params.lam,
        label_rule=rule,
        peak_elements=peak,
    )


def fit(X: DataMatrix, params: HyperParams) -> FitResult:
    """Cluster column-samples by alternating code and dictionary updates.

    Normalizes columns, initializes the dictionary (random or spherical
    k-means), resolves ``lam`` when unset, seeds the codes with a joint ridge
    solve, then alternates the chosen code solver with projected gradient
    dictionary steps until the relative change in both factors drops below
    ``tol`` or ``max_iters`` is reached.  Labels come from the unique-support
    rule with the residual rule as fallback.
    """
    params.validate()
    if X.mask is not None:
        if np.all(X.mask == 1.0):
            X = DataMatrix(X.values, mask=None, column_normalized=X.column_normalized)
        else:
            raise InvalidParamsError(
                "data carries a mask with missing entries; use fit_missing"
            )
    Xn = X if X.column_normalized else normalize_columns(X)
    if Xn.n < params.k * params.d:
        warnings.warn(
            f"n = {Xn.n} is below the recommended k*d = {params.k * params.d} samples"
        )
    D0 = _initial_dictionary(Xn, params)
    lam = params.lam if params.lam is not None else estimate_lambda(Xn, D0)
    resolved = replace(params, lam=lam)
    C0 = ridge_codes(Xn, D0, params.ridge_small, joint=True)
    return _alternate(Xn, D0, C0, resolved)
