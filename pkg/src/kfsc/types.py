"""Core data containers and validation helpers.

Samples are stored as columns throughout the package: a data matrix is
(n_features, n_samples), a dictionary block is (n_features, block_width), and
a coefficient block is (block_width, n_samples).  Labels returned by the
functional API are 1-based integers in [1, k]; the scikit-learn wrappers in
:mod:`kfsc.estimators` convert to the usual 0-based convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParamsError, ShapeMismatchError

# Feasibility tolerance for unit-norm checks (dictionary columns, normalized data).
UNIT_TOL = 1e-12

# Group norms above this count as a nonzero block in support computations.
SUPPORT_TOL = 1e-10


def check_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce ``values`` to a non-empty 2-d float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatchError(
            f"{name} must be a non-empty 2-d array, got shape {np.shape(values)}"
        )
    return arr


def check_labels(labels, name: str = "labels") -> np.ndarray:
    """Coerce a label sequence to a 1-d integer array."""
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeMismatchError(f"{name} must be a non-empty 1-d sequence")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.all(rounded == arr):
            raise InvalidParamsError(f"{name} must be integers")
        arr = rounded
    return arr.astype(np.int64)


@dataclass(frozen=True)
class DataMatrix:
    """Dense data matrix with samples as columns and an optional observation mask.

    ``mask`` has the same shape as ``values`` with 1 marking observed entries.
    When ``column_normalized`` is set, every column has unit Euclidean norm
    (computed over observed entries only when a mask is present).
    """

    values: np.ndarray
    mask: np.ndarray | None = None
    column_normalized: bool = False

    def __post_init__(self):
        values = check_matrix(self.values, "values")
        object.__setattr__(self, "values", values)
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=np.float64)
            if mask.shape != values.shape:
                raise ShapeMismatchError(
                    f"mask shape {mask.shape} does not match values shape {values.shape}"
                )
            if not np.all((mask == 0.0) | (mask == 1.0)):
                raise InvalidParamsError("mask entries must be 0 or 1")
            object.__setattr__(self, "mask", mask)
        if self.column_normalized:
            norms = self.column_norms()
            if not np.allclose(norms, 1.0, rtol=0.0, atol=UNIT_TOL):
                raise InvalidParamsError(
                    "column_normalized is set but some columns are not unit norm"
                )

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def column_norms(self) -> np.ndarray:
        """Euclidean column norms, restricted to observed entries when masked."""
        if self.mask is None:
            return np.linalg.norm(self.values, axis=0)
        return np.sqrt(np.sum((self.values * self.mask) ** 2, axis=0))

    def observed_values(self) -> np.ndarray:
        """Values with unobserved entries zero-filled (a copy when masked)."""
        if self.mask is None:
            return self.values
        return self.values * self.mask


@dataclass(frozen=True)
class Dictionary:
    """Column-wise concatenation of k dictionary blocks, each (m, d).

    Every column lies in the closed unit ball.  Block ``j`` occupies columns
    ``[j*d, (j+1)*d)`` of ``stacked``.
    """

    stacked: np.ndarray
    k: int
    d: int

    def __post_init__(self):
        stacked = check_matrix(self.stacked, "stacked")
        object.__setattr__(self, "stacked", stacked)
        if self.k < 1 or self.d < 1:
            raise InvalidParamsError("k and d must be positive integers")
        if stacked.shape[1] != self.k * self.d:
            raise ShapeMismatchError(
                f"stacked has {stacked.shape[1]} columns, expected k*d = {self.k * self.d}"
            )
        norms = np.linalg.norm(stacked, axis=0)
        if np.any(norms > 1.0 + UNIT_TOL):
            raise InvalidParamsError(
                f"dictionary columns must have norm <= 1 (max {norms.max():.3e})"
            )

    @classmethod
    def from_blocks(cls, blocks) -> "Dictionary":
        blocks = [check_matrix(b, "block") for b in blocks]
        if not blocks:
            raise InvalidParamsError("need at least one block")
        m, d = blocks[0].shape
        for b in blocks[1:]:
            if b.shape != (m, d):
                raise ShapeMismatchError("all blocks must share the same shape")
        return cls(np.hstack(blocks), k=len(blocks), d=d)

    @property
    def m(self) -> int:
        return self.stacked.shape[0]

    def block(self, j: int) -> np.ndarray:
        return self.stacked[:, j * self.d : (j + 1) * self.d]

    @property
    def blocks(self) -> tuple:
        return tuple(self.block(j) for j in range(self.k))


@dataclass(frozen=True)
class Coefficients:
    """Row-wise concatenation of k coefficient blocks, each (d, n)."""

    stacked: np.ndarray
    k: int
    d: int

    def __post_init__(self):
        stacked = check_matrix(self.stacked, "stacked")
        object.__setattr__(self, "stacked", stacked)
        if self.k < 1 or self.d < 1:
            raise InvalidParamsError("k and d must be positive integers")
        if stacked.shape[0] != self.k * self.d:
            raise ShapeMismatchError(
                f"stacked has {stacked.shape[0]} rows, expected k*d = {self.k * self.d}"
            )
        if not np.all(np.isfinite(stacked)):
            raise InvalidParamsError("coefficients must be finite")

    @classmethod
    def from_blocks(cls, blocks) -> "Coefficients":
        blocks = [check_matrix(b, "block") for b in blocks]
        if not blocks:
            raise InvalidParamsError("need at least one block")
        d, n = blocks[0].shape
        for b in blocks[1:]:
            if b.shape != (d, n):
                raise ShapeMismatchError("all blocks must share the same shape")
        return cls(np.vstack(blocks), k=len(blocks), d=d)

    @property
    def n(self) -> int:
        return self.stacked.shape[1]

    def block(self, j: int) -> np.ndarray:
        return self.stacked[j * self.d : (j + 1) * self.d, :]

    @property
    def blocks(self) -> tuple:
        return tuple(self.block(j) for j in range(self.k))

    def group_norms(self) -> np.ndarray:
        """Per-column Euclidean norm of every block, shape (k, n)."""
        return np.linalg.norm(self.stacked.reshape(self.k, self.d, -1), axis=1)

    def support_counts(self, tol: float = SUPPORT_TOL) -> np.ndarray:
        """Number of nonzero blocks per column, shape (n,)."""
        return np.sum(self.group_norms() > tol, axis=0)

    def group_support(self, i: int, tol: float = SUPPORT_TOL) -> tuple:
        """0-based indices of the blocks with nonzero column ``i``."""
        norms = self.group_norms()[:, i]
        return tuple(np.nonzero(norms > tol)[0])


@dataclass
class HyperParams:
    """Hyper-parameters of the alternating solver.

    ``lam`` is the group-sparsity weight; ``None`` resolves it automatically
    from the initial dictionary (two-block score rule) after initialization.
    """

    k: int
    d: int
    lam: float | None = None
    max_iters: int = 200
    delta: float = 0.95
    gamma: float = 1.0
    inner_d_steps: int = 5
    tol: float = 1e-4
    ridge_small: float = 1e-5
    c_solver: str = "gauss-seidel"
    init: str = "kmeans"
    seed: int = 0
    kmeans_reps: int = 10

    def validate(self) -> None:
        if self.k < 1:
            raise InvalidParamsError("k must be a positive integer")
        if self.d < 1:
            raise InvalidParamsError("d must be a positive integer")
        if self.lam is not None and not self.lam > 0:
            raise InvalidParamsError("lam must be positive (or None for automatic)")
        if self.max_iters < 1:
            raise InvalidParamsError("max_iters must be a positive integer")
        if not 0.0 <= self.delta < 1.0:
            raise InvalidParamsError("delta must lie in [0, 1)")
        if self.gamma < 1.0:
            raise InvalidParamsError("gamma must be >= 1")
        if self.inner_d_steps < 1:
            raise InvalidParamsError("inner_d_steps must be a positive integer")
        if not self.tol > 0:
            raise InvalidParamsError("tol must be positive")
        if not self.ridge_small > 0:
            raise InvalidParamsError("ridge_small must be positive")
        if self.c_solver not in ("gauss-seidel", "jacobi"):
            raise InvalidParamsError(f"unknown c_solver {self.c_solver!r}")
        if self.init not in ("kmeans", "random"):
            raise InvalidParamsError(f"unknown init {self.init!r}")


@dataclass
class SolverState:
    """Mutable per-run solver bookkeeping.

    ``coeff_delta`` holds the previous coefficient step C_{t-1} - C_t;
    ``tau_prev``/``tau_curr`` hold the last two per-block step constants used
    to scale the extrapolation weight.
    """

    iter: int = 0
    coeff_delta: np.ndarray | None = None
    tau_prev: np.ndarray | None = None
    tau_curr: np.ndarray | None = None
    objective_trace: list = field(default_factory=list)
    rel_change_trace: list = field(default_factory=list)


@dataclass
class FitResult:
    """Outcome of a clustering run.

    ``labels`` are 1-based cluster assignments.  ``label_rule`` records
    whether the unique-support rule applied or the residual rule was the
    fallback.  ``peak_elements`` is the structural high-water array element
    count of the solve (documented in the README).
    """

    labels: np.ndarray
    dictionary: Dictionary
    codes: Coefficients
    state: SolverState
    seconds_per_iter: list
    lam: float
    label_rule: str
    peak_elements: int
