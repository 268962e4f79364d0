"""Key-value text adapter, similarity kernel and residual fusion with a linear head.

The adapter scores an input feature against NK stored text features, squashes
the cosine similarities through exp(-beta * (1 - x)) and pools them per class
with a fixed one-hot label matrix. Its logits are added to the linear
classifier's with weight alpha.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import DOMAIN_CLASS_TEMPLATE
from .validation import as_float_matrix, as_float_vector, check_unit_rows

# the K=11 domain-bank names used to render adapter-initialization prompts
DEFAULT_DOMAIN_NAMES = (
    "photo",
    "cartoon",
    "painting",
    "sketch",
    "art",
    "clipart",
    "infograph",
    "quickdraw",
    "product",
    "real-world",
    "drawing",
)


def phi(x, beta: float):
    """exp(-beta * (1 - x)): maps similarity in [-1, 1] to (0, 1], phi(1) = 1."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return np.exp(-beta * (1.0 - np.asarray(x, dtype=np.float64)))


def one_hot_labels(n_classes: int, n_domains: int) -> np.ndarray:
    """NK x N matrix; row class*K + domain has a single 1 in its class column."""
    if n_classes < 1 or n_domains < 1:
        raise ValueError("need at least one class and one domain")
    return np.repeat(np.eye(n_classes, dtype=np.float64), n_domains, axis=0)


@dataclass
class TextAdapter:
    keys: np.ndarray  # NK x D, unit-norm rows
    labels: np.ndarray  # NK x N one-hot
    alpha: float = 1.0
    beta: float = 2.0
    domain_names: tuple[str, ...] = DEFAULT_DOMAIN_NAMES

    def __post_init__(self):
        self.keys = as_float_matrix(self.keys, "adapter keys")
        self.labels = as_float_matrix(self.labels, "adapter labels")
        if self.keys.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"adapter keys rows {self.keys.shape[0]} != label rows {self.labels.shape[0]}"
            )
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        check_unit_rows(self.keys, 1e-3, "adapter keys")

    @property
    def n_classes(self) -> int:
        return self.labels.shape[1]

    @property
    def dim(self) -> int:
        return self.keys.shape[1]

    def renormalize_keys(self) -> None:
        """Keep key rows on the unit sphere so similarities stay cosines."""
        self.keys /= np.linalg.norm(self.keys, axis=1)[:, None]


@dataclass
class LinearClassifier:
    weight: np.ndarray  # N x D

    def __post_init__(self):
        self.weight = as_float_matrix(self.weight, "classifier weight")

    @property
    def n_classes(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def zeros(cls, n_classes: int, dim: int) -> "LinearClassifier":
        return cls(np.zeros((n_classes, dim), dtype=np.float64))


def init_from_templates(encoder, class_names, domain_names) -> np.ndarray:
    """Adapter keys encoded from the domain-bank prompt, class-major row order."""
    class_names = tuple(class_names)
    domain_names = tuple(domain_names)
    if not class_names or not domain_names:
        raise ValueError("class and domain name lists must be non-empty")
    rows = []
    for name in class_names:
        for dom in domain_names:
            rows.append(encoder.encode(DOMAIN_CLASS_TEMPLATE, class_name=name, domain_name=dom))
    return np.stack(rows)


def init_random(n_classes: int, n_domains: int, dim: int, seed: int) -> np.ndarray:
    """Random unit-norm keys for the initialization ablation."""
    rng = np.random.default_rng(seed)
    keys = rng.standard_normal((n_classes * n_domains, dim))
    return keys / np.linalg.norm(keys, axis=1)[:, None]


def adapter_logits(f: np.ndarray, adapter: TextAdapter) -> np.ndarray:
    """Per-class sums of the squashed similarities: phi(f @ keys.T) @ labels."""
    f = as_float_vector(f, "input feature")
    if f.shape[0] != adapter.dim:
        raise ValueError(f"feature dim {f.shape[0]} != adapter dim {adapter.dim}")
    return phi(adapter.keys @ f, adapter.beta) @ adapter.labels


def adapter_logits_batch(X: np.ndarray, adapter: TextAdapter) -> np.ndarray:
    X = as_float_matrix(X, "input features")
    if X.shape[1] != adapter.dim:
        raise ValueError(f"feature dim {X.shape[1]} != adapter dim {adapter.dim}")
    return phi(X @ adapter.keys.T, adapter.beta) @ adapter.labels


def combined_logits(f: np.ndarray, classifier: LinearClassifier, adapter: TextAdapter) -> np.ndarray:
    """Linear logits plus alpha-weighted adapter logits."""
    f = as_float_vector(f, "input feature")
    if f.shape[0] != classifier.weight.shape[1]:
        raise ValueError(f"feature dim {f.shape[0]} != classifier dim {classifier.weight.shape[1]}")
    fc = classifier.weight @ f
    if adapter.alpha == 0.0:
        return fc
    return fc + adapter.alpha * adapter_logits(f, adapter)


def combined_logits_batch(X: np.ndarray, classifier: LinearClassifier, adapter: TextAdapter) -> np.ndarray:
    X = as_float_matrix(X, "input features")
    fc = X @ classifier.weight.T
    if adapter.alpha == 0.0:
        return fc
    return fc + adapter.alpha * adapter_logits_batch(X, adapter)


def predict(f: np.ndarray, classifier: LinearClassifier, adapter: TextAdapter) -> int:
    """Argmax class; ties resolve to the lowest index."""
    return int(np.argmax(combined_logits(f, classifier, adapter)))


def predict_batch(X: np.ndarray, classifier: LinearClassifier, adapter: TextAdapter) -> np.ndarray:
    return np.argmax(combined_logits_batch(X, classifier, adapter), axis=1)
