"""Scikit-learn style wrappers around the functional API.

These estimators follow the usual sklearn conventions: samples are rows,
``labels_`` are 0-based, and parameters are introspectable via
``get_params``.  The functional API underneath works on column-sample
matrices with 1-based labels; the wrappers translate at the boundary.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ops import assign_by_residual, normalize_columns
from .solver import fit
from .types import DataMatrix, HyperParams
from .variants import (
    LandmarkParams,
    MiniBatchParams,
    RobustParams,
    fit_landmark,
    fit_minibatch,
    fit_missing,
    fit_robust_sparse,
)


class _KFSCBase(ClusterMixin, BaseEstimator):
    def __init__(
        self,
        n_clusters=5,
        d=10,
        lam="auto",
        solver="gauss-seidel",
        init="kmeans",
        max_iters=200,
        tol=1e-4,
        delta=0.95,
        gamma=1.0,
        inner_d_steps=5,
        ridge=1e-5,
        kmeans_reps=10,
        random_state=0,
    ):
        self.n_clusters = n_clusters
        self.d = d
        self.lam = lam
        self.solver = solver
        self.init = init
        self.max_iters = max_iters
        self.tol = tol
        self.delta = delta
        self.gamma = gamma
        self.inner_d_steps = inner_d_steps
        self.ridge = ridge
        self.kmeans_reps = kmeans_reps
        self.random_state = random_state

    def _hyper_params(self) -> HyperParams:
        lam = None if self.lam in (None, "auto") else float(self.lam)
        return HyperParams(
            k=self.n_clusters,
            d=self.d,
            lam=lam,
            max_iters=self.max_iters,
            delta=self.delta,
            gamma=self.gamma,
            inner_d_steps=self.inner_d_steps,
            tol=self.tol,
            ridge_small=self.ridge,
            c_solver=self.solver,
            init=self.init,
            seed=self.random_state,
            kmeans_reps=self.kmeans_reps,
        )

    def _finish(self, X, result):
        self.result_ = result
        self.labels_ = result.labels - 1
        self.dictionary_ = result.dictionary
        self.lam_ = result.lam
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = len(result.seconds_per_iter)
        return self

    def predict(self, X):
        """Assign new samples to the block with least ridge reconstruction error."""
        check_is_fitted(self, "dictionary_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        data = normalize_columns(DataMatrix(X.T))
        return assign_by_residual(data, self.dictionary_, self.ridge) - 1


class KFSC(_KFSCBase):
    """Subspace clustering by direct group-sparse factorization.

    The data matrix is factorized into ``n_clusters`` dictionary blocks of
    ``d`` columns each with group-sparse codes; samples are assigned to the
    block supporting (or best reconstructing) them.

    Parameters mirror :class:`kfsc.HyperParams`; ``lam="auto"`` picks the
    group-sparsity weight from the initial dictionary.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        return self._finish(X, fit(DataMatrix(X.T), self._hyper_params()))


class MiniBatchKFSC(_KFSCBase):
    """KFSC fitted by repeated passes over column batches."""

    def __init__(
        self,
        n_clusters=5,
        d=10,
        lam="auto",
        batch_size=50,
        c_passes=5,
        d_steps=5,
        epochs=1,
        shuffle_seed=None,
        init="kmeans",
        max_iters=200,
        tol=1e-4,
        delta=0.95,
        gamma=1.0,
        ridge=1e-5,
        kmeans_reps=10,
        random_state=0,
    ):
        super().__init__(
            n_clusters=n_clusters,
            d=d,
            lam=lam,
            solver="gauss-seidel",
            init=init,
            max_iters=max_iters,
            tol=tol,
            delta=delta,
            gamma=gamma,
            inner_d_steps=d_steps,
            ridge=ridge,
            kmeans_reps=kmeans_reps,
            random_state=random_state,
        )
        self.batch_size = batch_size
        self.c_passes = c_passes
        self.d_steps = d_steps
        self.epochs = epochs
        self.shuffle_seed = shuffle_seed

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        mb = MiniBatchParams(
            batch_size=self.batch_size,
            c_passes=self.c_passes,
            d_steps=self.d_steps,
            epochs=self.epochs,
            shuffle_seed=self.shuffle_seed,
        )
        return self._finish(X, fit_minibatch(DataMatrix(X.T), self._hyper_params(), mb))


class LandmarkKFSC(_KFSCBase):
    """KFSC fitted on spherical k-means centers, labels assigned out of sample."""

    def __init__(
        self,
        n_clusters=5,
        d=10,
        lam="auto",
        landmarks=100,
        landmark_kmeans_reps=100,
        solver="gauss-seidel",
        init="kmeans",
        max_iters=200,
        tol=1e-4,
        delta=0.95,
        gamma=1.0,
        inner_d_steps=5,
        ridge=1e-5,
        kmeans_reps=10,
        random_state=0,
    ):
        super().__init__(
            n_clusters=n_clusters,
            d=d,
            lam=lam,
            solver=solver,
            init=init,
            max_iters=max_iters,
            tol=tol,
            delta=delta,
            gamma=gamma,
            inner_d_steps=inner_d_steps,
            ridge=ridge,
            kmeans_reps=kmeans_reps,
            random_state=random_state,
        )
        self.landmarks = landmarks
        self.landmark_kmeans_reps = landmark_kmeans_reps

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        lm = LandmarkParams(
            landmark_count=self.landmarks,
            kmeans_reps=self.landmark_kmeans_reps,
            seed=self.random_state,
        )
        return self._finish(X, fit_landmark(DataMatrix(X.T), self._hyper_params(), lm))


class RobustKFSC(_KFSCBase):
    """KFSC with an explicit sparse-noise term.

    After fitting, ``noise_`` holds the separated noise with the sklearn
    (samples, features) orientation.
    """

    def __init__(
        self,
        n_clusters=5,
        d=10,
        lam="auto",
        noise_weight=0.15,
        noise_norm="l1",
        solver="gauss-seidel",
        init="kmeans",
        max_iters=200,
        tol=1e-4,
        delta=0.95,
        gamma=1.0,
        inner_d_steps=5,
        ridge=1e-5,
        kmeans_reps=10,
        random_state=0,
    ):
        super().__init__(
            n_clusters=n_clusters,
            d=d,
            lam=lam,
            solver=solver,
            init=init,
            max_iters=max_iters,
            tol=tol,
            delta=delta,
            gamma=gamma,
            inner_d_steps=inner_d_steps,
            ridge=ridge,
            kmeans_reps=kmeans_reps,
            random_state=random_state,
        )
        self.noise_weight = noise_weight
        self.noise_norm = noise_norm

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        rp = RobustParams(noise_weight=self.noise_weight, noise_norm=self.noise_norm)
        result, noise = fit_robust_sparse(DataMatrix(X.T), self._hyper_params(), rp)
        self.noise_ = noise.T
        return self._finish(X, result)


class MissingKFSC(_KFSCBase):
    """KFSC on partially observed data (NaN entries), with imputation.

    After fitting, ``imputed_`` holds the completed data with the sklearn
    (samples, features) orientation; observed entries are untouched.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_all_finite=False)
        values = np.nan_to_num(X.T, nan=0.0)
        mask = (~np.isnan(X.T)).astype(np.float64)
        result, imputed = fit_missing(
            DataMatrix(values, mask=mask), self._hyper_params()
        )
        self.imputed_ = imputed.T
        return self._finish(X, result)
