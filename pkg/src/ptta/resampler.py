"""Per-class Gaussian statistics over style features and fresh draws from them.

The covariance is diagonal: variances are estimated elementwise with the
unbiased (M-1) denominator, and sampling is independent per dimension via
Box-Muller over a seeded splitmix64 stream. Draws are L2-normalized so they
live on the same unit sphere as every other feature in the space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import NumericError
from .rng import GaussianStream, mix64
from .stylegen import StyleBank
from .validation import as_float_matrix, check_labels


@dataclass(frozen=True)
class ClassStats:
    mean: np.ndarray  # D
    var: np.ndarray  # D, elementwise
    class_index: int
    count: int


def estimate_stats(features: np.ndarray, class_index: int = 0) -> ClassStats:
    """Sample mean and unbiased elementwise variance of one class's features."""
    features = as_float_matrix(features, "style features")
    m = features.shape[0]
    if m < 2:
        raise NumericError("resampling requires at least two styles")
    mean = features.mean(axis=0)
    var = np.square(features - mean).sum(axis=0) / (m - 1)
    return ClassStats(mean=mean, var=var, class_index=class_index, count=m)


def resample_raw(stats: ClassStats, count: int, stream: GaussianStream) -> np.ndarray:
    """Pre-normalization Gaussian draws, one row at a time off the stream."""
    if count < 1:
        raise ValueError(f"resample count must be >= 1, got {count}")
    std = np.sqrt(stats.var)
    dim = stats.mean.shape[0]
    rows = np.zeros((count, dim), dtype=np.float64)
    for r in range(count):
        z = np.array(stream.normals(dim), dtype=np.float64)
        rows[r] = stats.mean + std * z
    return rows


def resample(stats: ClassStats, count: int, stream: GaussianStream) -> np.ndarray:
    """Unit-norm rows drawn from N(mean, diag(var)); one redraw on a near-zero norm."""
    rows = resample_raw(stats, count, stream)
    norms = np.linalg.norm(rows, axis=1)
    for r in range(count):
        if norms[r] < 1e-12:
            rows[r] = resample_raw(stats, 1, stream)[0]
            norms[r] = np.linalg.norm(rows[r])
            if norms[r] < 1e-12:
                raise NumericError(f"resampled row for class {stats.class_index} collapsed to zero twice")
    return rows / norms[:, None]


def resample_epoch(bank: StyleBank, seed: int, epoch: int) -> tuple[np.ndarray, np.ndarray]:
    """One fresh draw per original style feature, per class, for one epoch.

    The epoch index is mixed into the seed, so epochs differ but are each
    reproducible; every class gets its own stream.
    """
    base = mix64(seed, epoch)
    n_classes = bank.n_classes
    blocks: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    for j in range(n_classes):
        class_rows = bank.rows_for_class(j)
        stats = estimate_stats(class_rows, class_index=j)
        stream = GaussianStream(base ^ j)
        drawn = resample(stats, class_rows.shape[0], stream)
        blocks.append(drawn)
        labels.append(np.full(drawn.shape[0], j, dtype=np.int64))
    return np.concatenate(blocks, axis=0), np.concatenate(labels)


class ClassGaussianResampler(BaseEstimator):
    """Estimator-style wrapper: fit per-class Gaussians, then sample new features."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = check_labels(y, X.shape[0], "y")
        n_classes = int(y.max()) + 1
        self.stats_ = [estimate_stats(X[y == j], class_index=j) for j in range(n_classes)]
        self.counts_ = np.bincount(y, minlength=n_classes)
        self.n_features_in_ = X.shape[1]
        return self

    def sample(self, epoch: int = 0) -> tuple[np.ndarray, np.ndarray]:
        if not hasattr(self, "stats_"):
            raise NumericError("resampler must be fitted before sampling")
        base = mix64(self.seed, epoch)
        blocks, labels = [], []
        for stats in self.stats_:
            stream = GaussianStream(base ^ stats.class_index)
            drawn = resample(stats, stats.count, stream)
            blocks.append(drawn)
            labels.append(np.full(stats.count, stats.class_index, dtype=np.int64))
        return np.concatenate(blocks, axis=0), np.concatenate(labels)
