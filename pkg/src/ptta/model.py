"""Estimator facade: fit on labeled embedding features, predict class indices.

Wraps the linear head + text adapter + training loop behind the familiar
fit/predict/get_params surface so the pipeline composes with sklearn tooling.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .adapter import (
    LinearClassifier,
    TextAdapter,
    combined_logits_batch,
    init_random,
    one_hot_labels,
    predict_batch,
)
from .errors import ConfigError, DataFormatError
from .featio import FeatureMatrix, read_matrix, write_matrix
from .stylegen import StyleBank
from .trainer import TrainConfig, fit as train_fit
from .validation import as_float_matrix, check_labels


class ResidualAdapterClassifier(BaseEstimator, ClassifierMixin):
    """Linear classifier fused with a key-value text adapter, trained jointly.

    Parameters mirror the training configuration; ``adapter_features`` is an
    optional NK x D matrix of precomputed adapter keys (template init). When
    omitted, keys are drawn randomly with ``n_domains`` keys per class.
    """

    def __init__(
        self,
        alpha: float = 1.0,
        beta: float = 2.0,
        epochs: int = 50,
        batch_size: int = 128,
        lr_classifier: float = 0.05,
        lr_adapter: float = 0.01,
        momentum: float = 0.9,
        use_resampling: bool = True,
        use_adapter: bool = True,
        resample_per_batch: bool = False,
        adapter_features: np.ndarray | None = None,
        n_domains: int = 11,
        seed: int = 0,
    ):
        self.alpha = alpha
        self.beta = beta
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr_classifier = lr_classifier
        self.lr_adapter = lr_adapter
        self.momentum = momentum
        self.use_resampling = use_resampling
        self.use_adapter = use_adapter
        self.resample_per_batch = resample_per_batch
        self.adapter_features = adapter_features
        self.n_domains = n_domains
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr_classifier=self.lr_classifier,
            lr_adapter=self.lr_adapter,
            momentum=self.momentum,
            alpha=self.alpha,
            beta=self.beta,
            sfr_enabled=self.use_resampling,
            ta_enabled=self.use_adapter,
            resample_per_batch=self.resample_per_batch,
            seed=self.seed,
        )

    def _init_keys(self, n_classes: int, dim: int) -> np.ndarray:
        if self.adapter_features is not None:
            keys = as_float_matrix(self.adapter_features, "adapter_features").copy()
            if keys.shape[1] != dim:
                raise ConfigError(f"adapter_features dim {keys.shape[1]} != feature dim {dim}")
            if keys.shape[0] % n_classes != 0:
                raise ConfigError(
                    f"adapter_features rows {keys.shape[0]} not divisible by {n_classes} classes"
                )
            return keys
        if self.n_domains < 1:
            raise ConfigError(f"n_domains must be >= 1, got {self.n_domains}")
        return init_random(n_classes, self.n_domains, dim, self.seed)

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = check_labels(y, X.shape[0], "y")
        n_classes = int(y.max()) + 1
        if n_classes < 2:
            raise ConfigError("need at least two classes to fit")
        counts = np.bincount(y, minlength=n_classes)
        if counts.min() < 1:
            raise ConfigError("every class index up to max(y) must appear in y")
        dim = X.shape[1]
        keys = self._init_keys(n_classes, dim)
        k = keys.shape[0] // n_classes
        adapter = TextAdapter(
            keys=keys,
            labels=one_hot_labels(n_classes, k),
            alpha=self.alpha if self.use_adapter else 0.0,
            beta=self.beta,
        )
        classifier = LinearClassifier.zeros(n_classes, dim)
        bank = StyleBank(features=X, labels=y)
        self.trace_ = train_fit(bank, classifier, adapter, self._train_config())
        self.classifier_ = classifier
        self.adapter_ = adapter
        self.classes_ = np.arange(n_classes)
        self.n_features_in_ = dim
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "classifier_"):
            raise ConfigError("classifier has not been fitted")

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = as_float_matrix(X, "X")
        return predict_batch(X, self.classifier_, self.adapter_)

    def predict_logits(self, X) -> np.ndarray:
        self._check_fitted()
        X = as_float_matrix(X, "X")
        return combined_logits_batch(X, self.classifier_, self.adapter_)


MODEL_MANIFEST = "model.json"


def save_fitted(
    model: ResidualAdapterClassifier,
    directory,
    class_names: tuple[str, ...],
    domain_names: tuple[str, ...],
) -> None:
    """Persist a fitted model: classifier + adapter keys as PTAF, scalars as JSON."""
    model._check_fitted()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(FeatureMatrix(model.classifier_.weight, unit_norm=False), directory / "classifier.ptaf")
    write_matrix(FeatureMatrix(model.adapter_.keys, unit_norm=True), directory / "adapter_keys.ptaf")
    manifest = {
        "format": "ptta-model",
        "version": 1,
        "alpha": model.adapter_.alpha,
        "beta": model.adapter_.beta,
        "dim": model.n_features_in_,
        "class_names": list(class_names),
        "domain_names": list(domain_names),
        "files": {"classifier": "classifier.ptaf", "adapter_keys": "adapter_keys.ptaf"},
    }
    (directory / MODEL_MANIFEST).write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_fitted(directory) -> tuple[ResidualAdapterClassifier, tuple[str, ...], tuple[str, ...]]:
    """Rebuild a fitted model from :func:`save_fitted` output."""
    directory = Path(directory)
    manifest_path = directory / MODEL_MANIFEST
    if not manifest_path.is_file():
        raise DataFormatError(f"{directory}: missing {MODEL_MANIFEST}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    weight = read_matrix(directory / manifest["files"]["classifier"]).data
    keys = read_matrix(directory / manifest["files"]["adapter_keys"]).data
    class_names = tuple(manifest["class_names"])
    domain_names = tuple(manifest["domain_names"])
    n_classes = len(class_names)
    if weight.shape[0] != n_classes:
        raise DataFormatError(
            f"classifier rows {weight.shape[0]} != {n_classes} classes in {MODEL_MANIFEST}"
        )
    if keys.shape[0] % n_classes != 0:
        raise DataFormatError(f"adapter key rows {keys.shape[0]} not divisible by {n_classes} classes")
    k = keys.shape[0] // n_classes
    model = ResidualAdapterClassifier(alpha=float(manifest["alpha"]), beta=float(manifest["beta"]))
    model.classifier_ = LinearClassifier(weight)
    model.adapter_ = TextAdapter(
        keys=keys,
        labels=one_hot_labels(n_classes, k),
        alpha=float(manifest["alpha"]),
        beta=float(manifest["beta"]),
        domain_names=domain_names,
    )
    model.classes_ = np.arange(n_classes)
    model.n_features_in_ = weight.shape[1]
    return model, class_names, domain_names
