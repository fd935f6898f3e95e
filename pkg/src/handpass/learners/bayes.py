"""Gaussian naive Bayes in the log domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GaussianNbModel:
    classes: np.ndarray
    means: np.ndarray       # (C, d)
    variances: np.ndarray   # (C, d), smoothed
    log_priors: np.ndarray  # (C,)

    kind = "GaussianNB"

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def log_joint(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"{X.shape[1]} features, model trained on {self.n_features}"
            )
        const = -0.5 * (_LOG_2PI + np.log(self.variances)).sum(axis=1)
        out = np.empty((X.shape[0], self.classes.shape[0]))
        for lo in range(0, X.shape[0], 256):
            diff = X[lo : lo + 256, None, :] - self.means[None, :, :]
            out[lo : lo + 256] = -0.5 * (
                diff * diff / self.variances[None, :, :]
            ).sum(axis=2)
        return out + const[None, :] + self.log_priors[None, :]

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Posteriors, normalized with the usual max-shift for stability."""
        lj = self.log_joint(X)
        lj -= lj.max(axis=1, keepdims=True)
        p = np.exp(lj)
        return p / p.sum(axis=1, keepdims=True)


def fit_gnb(X, y_codes, classes, hyper) -> GaussianNbModel:
    n, d = X.shape
    C = classes.shape[0]
    means = np.empty((C, d))
    variances = np.empty((C, d))
    priors = np.empty(C)
    for c in range(C):
        rows = X[y_codes == c]
        means[c] = rows.mean(axis=0)
        variances[c] = rows.var(axis=0)
        priors[c] = rows.shape[0] / n
    # absolute smoothing floor scaled to the data's largest feature variance
    eps = hyper.var_smoothing * float(X.var(axis=0).max())
    if eps <= 0.0:
        eps = hyper.var_smoothing
    variances += eps
    return GaussianNbModel(
        classes=classes,
        means=means,
        variances=variances,
        log_priors=np.log(priors),
    )
