"""Sequential learning of style word vectors and freezing of style features.

Each style vector is trained in turn with SGD momentum against two losses:
a diversity term pushing its prompt feature away from the features of all
previously frozen styles, and a content term keeping every styled class
prompt closest to its own class anchor. Earlier vectors are never revisited.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .encoder import CLASS_TEMPLATE, STYLE_CLASS_TEMPLATE, STYLE_ONLY_TEMPLATE, ToyEncoder
from .errors import ConfigError, NumericError
from .featio import FeatureBundle
from .rng import GaussianStream


@dataclass
class StyleGenConfig:
    n_styles: int = 80
    init_std: float = 0.02
    iterations: int = 100
    lr: float = 0.002
    momentum: float = 0.9
    seed: int = 0

    def validate(self) -> None:
        if self.n_styles < 1:
            raise ConfigError(f"n_styles must be >= 1, got {self.n_styles}")
        if self.init_std <= 0:
            raise ConfigError(f"init_std must be positive, got {self.init_std}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")


@dataclass(frozen=True)
class StyleBank:
    """Frozen style features plus their class labels.

    ``features`` rows are class-major: row = class * styles_per_class + style.
    ``style_vectors`` / ``dom_features`` are only present for banks learned
    with the toy encoder (file-loaded banks carry features alone).
    """

    features: np.ndarray  # R x D
    labels: np.ndarray  # R, class index per row
    class_names: tuple[str, ...] | None = None
    style_vectors: np.ndarray | None = None  # M x d_tok
    style_ids: np.ndarray | None = None  # R, style index per row
    dom_features: np.ndarray | None = None  # M x D, features of the style-only prompt
    content_features: np.ndarray | None = None  # N x D class anchors
    loss_trace: np.ndarray | None = None  # M x iterations

    @property
    def n_classes(self) -> int:
        if self.class_names is not None:
            return len(self.class_names)
        return int(self.labels.max()) + 1

    @property
    def n_styles(self) -> int:
        if self.style_vectors is not None:
            return self.style_vectors.shape[0]
        return int(np.bincount(self.labels).max())

    def rows_for_class(self, j: int) -> np.ndarray:
        return self.features[self.labels == j]

    def to_bundle(self, domain_names: tuple[str, ...], adapter_features: np.ndarray, meta: dict | None = None) -> FeatureBundle:
        if self.class_names is None or self.content_features is None:
            raise ConfigError("only banks trained with class names can be exported as bundles")
        return FeatureBundle(
            class_names=self.class_names,
            domain_names=tuple(domain_names),
            content_features=self.content_features,
            adapter_features=adapter_features,
            style_features=self.features,
            style_vectors=self.style_vectors,
            meta=meta or {},
        )

    @classmethod
    def from_bundle(cls, bundle: FeatureBundle) -> "StyleBank":
        if bundle.style_features is None:
            raise ConfigError("bundle has no style features to train on")
        return cls(
            features=bundle.style_features,
            labels=bundle.style_labels(),
            class_names=bundle.class_names,
            style_vectors=bundle.style_vectors,
            content_features=bundle.content_features,
        )


def style_diversity_loss(style: ad.Tensor, prev_dom_features: np.ndarray, encoder: ToyEncoder) -> ad.Tensor:
    """Mean absolute cosine between this style's prompt feature and all frozen ones.

    Zero for the first style (nothing to diverge from).
    """
    tape = style.tape
    n_prev = prev_dom_features.shape[0] if prev_dom_features.size else 0
    if n_prev == 0:
        return tape.tensor(0.0)
    feat = encoder.encode_traced(STYLE_ONLY_TEMPLATE, style)
    # rows are unit-norm, so the matvec against a unit feature is the cosine
    cosines = ad.matvec(tape.tensor(prev_dom_features), feat)
    return ad.scale(ad.reduce_sum(ad.absolute(cosines)), 1.0 / n_prev)


def content_consistency_loss(
    style: ad.Tensor,
    content_features: np.ndarray,
    class_names: tuple[str, ...],
    encoder: ToyEncoder,
) -> ad.Tensor:
    """Mean over classes of cross-entropy on cosine logits against class anchors."""
    n_classes = len(class_names)
    if n_classes < 2:
        raise ConfigError("content consistency needs at least two classes")
    tape = style.tape
    anchors = tape.tensor(content_features)
    total: ad.Tensor | None = None
    for j, name in enumerate(class_names):
        feat = encoder.encode_traced(STYLE_CLASS_TEMPLATE, style, class_name=name)
        logits = ad.matvec(anchors, feat)
        ce = ad.log_softmax_cross_entropy(logits, j)
        total = ce if total is None else ad.add(total, ce)
    return ad.scale(total, 1.0 / n_classes)


def train_styles(config: StyleGenConfig, encoder: ToyEncoder, class_names: list[str] | tuple[str, ...]) -> StyleBank:
    """Learn the style vectors one at a time and freeze all style features."""
    config.validate()
    class_names = tuple(class_names)
    if len(class_names) < 2:
        raise ConfigError("style training needs at least two class names")
    content = encoder.encode_classes(class_names)
    init_stream = GaussianStream(config.seed)

    vectors = np.zeros((config.n_styles, encoder.token_dim), dtype=np.float64)
    dom_features = np.zeros((config.n_styles, encoder.feature_dim), dtype=np.float64)
    losses = np.zeros((config.n_styles, config.iterations), dtype=np.float64)

    for i in range(config.n_styles):
        s = config.init_std * np.array(init_stream.normals(encoder.token_dim), dtype=np.float64)
        velocity = np.zeros_like(s)
        prev = dom_features[:i]
        for t in range(config.iterations):
            tape = ad.Tape()
            leaf = tape.tensor(s, requires_grad=True, name=f"style-{i}")
            loss = content_consistency_loss(leaf, content, class_names, encoder)
            if i > 0:
                loss = ad.add(style_diversity_loss(leaf, prev, encoder), loss)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericError(f"non-finite style loss at style {i}, iteration {t}")
            losses[i, t] = value
            tape.backward(loss)
            velocity = config.momentum * velocity + leaf.grad
            s = s - config.lr * velocity
        vectors[i] = s
        dom_features[i] = encoder.encode(STYLE_ONLY_TEMPLATE, style=s)

    n_classes = len(class_names)
    features = np.zeros((config.n_styles * n_classes, encoder.feature_dim), dtype=np.float64)
    labels = np.zeros(config.n_styles * n_classes, dtype=np.int64)
    style_ids = np.zeros_like(labels)
    for j, name in enumerate(class_names):
        for i in range(config.n_styles):
            row = j * config.n_styles + i
            features[row] = encoder.encode(STYLE_CLASS_TEMPLATE, style=vectors[i], class_name=name)
            labels[row] = j
            style_ids[row] = i
    return StyleBank(
        features=features,
        labels=labels,
        class_names=class_names,
        style_vectors=vectors,
        style_ids=style_ids,
        dom_features=dom_features,
        content_features=content,
        loss_trace=losses,
    )
