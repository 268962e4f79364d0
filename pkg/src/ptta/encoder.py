"""Text encoders mapping prompts to unit-norm embedding-space features.

Two implementations share one interface: a deterministic differentiable toy
encoder (token hash embeddings, mean pooling, a frozen random projection,
L2 normalization) for desk-scale end-to-end runs, and a file-backed encoder
that looks rendered prompts up in a stored feature bundle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import DataFormatError, NumericError
from .rng import SplitMix64, fnv1a64, SPLITMIX_GAMMA

# slot markers inside prompt templates
STYLE_SLOT = "<style>"
CLASS_SLOT = "<class>"
DOMAIN_SLOT = "<domain>"


@dataclass(frozen=True)
class PromptTemplate:
    """Token sequence; at most one style slot, plus optional class/domain slots."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.tokens.count(STYLE_SLOT) > 1:
            raise ValueError("a prompt template may contain at most one style slot")

    @property
    def has_style(self) -> bool:
        return STYLE_SLOT in self.tokens

    @property
    def has_class(self) -> bool:
        return CLASS_SLOT in self.tokens

    @property
    def has_domain(self) -> bool:
        return DOMAIN_SLOT in self.tokens


# the four templates used across the pipeline
STYLE_CLASS_TEMPLATE = PromptTemplate(("a", STYLE_SLOT, "style", "of", "a", CLASS_SLOT))
STYLE_ONLY_TEMPLATE = PromptTemplate(("a", STYLE_SLOT, "style", "of", "a"))
CLASS_TEMPLATE = PromptTemplate((CLASS_SLOT,))
DOMAIN_CLASS_TEMPLATE = PromptTemplate(("a", DOMAIN_SLOT, "of", "a", CLASS_SLOT))


def render_tokens(
    template: PromptTemplate,
    class_name: str | None = None,
    domain_name: str | None = None,
    keep_style_slot: bool = False,
) -> tuple[str, ...]:
    """Lowercase whitespace tokenization of the rendered template."""
    out: list[str] = []
    for tok in template.tokens:
        if tok == STYLE_SLOT:
            if not keep_style_slot:
                raise ValueError("template has an unbound style slot")
            out.append(STYLE_SLOT)
        elif tok == CLASS_SLOT:
            if class_name is None:
                raise ValueError("template has an unbound class slot")
            out.extend(class_name.lower().split())
        elif tok == DOMAIN_SLOT:
            if domain_name is None:
                raise ValueError("template has an unbound domain slot")
            out.extend(domain_name.lower().split())
        else:
            out.extend(tok.lower().split())
    return tuple(out)


def render_prompt(template: PromptTemplate, class_name: str | None = None, domain_name: str | None = None) -> str:
    """Rendered prompt string; style templates cannot be rendered to plain text."""
    if template.has_style:
        raise ValueError("cannot render a style-slot template to a plain prompt string")
    return " ".join(render_tokens(template, class_name=class_name, domain_name=domain_name))


def token_embedding(token: str, seed: int, token_dim: int) -> np.ndarray:
    """Deterministic embedding: splitmix64 stream seeded by FNV-1a(token) XOR seed,
    each output mapped to [-1, 1)."""
    if not token:
        raise ValueError("token must be non-empty")
    stream = SplitMix64(fnv1a64(token.encode("utf-8")) ^ seed)
    return np.array([stream.next_unit_interval() for _ in range(token_dim)], dtype=np.float64)


def projection_matrix(seed: int, feature_dim: int, token_dim: int) -> np.ndarray:
    """Frozen row-major projection; entries uniform in [-1, 1) scaled by 1/sqrt(token_dim)."""
    if feature_dim < 1 or token_dim < 1:
        raise ValueError("projection dimensions must be >= 1")
    stream = SplitMix64(seed ^ SPLITMIX_GAMMA)
    scale = 1.0 / math.sqrt(token_dim)
    flat = np.array([stream.next_unit_interval() for _ in range(feature_dim * token_dim)], dtype=np.float64)
    return flat.reshape(feature_dim, token_dim) * scale


class ToyEncoder:
    """Pure function of (seed, rendered prompt, style vector); outputs unit norm.

    Immutable after construction; concurrent encode calls are safe. Gradients
    w.r.t. the style vector are available through :meth:`encode_traced`.
    """

    def __init__(self, seed: int = 0, token_dim: int = 32, feature_dim: int = 64):
        if token_dim < 1 or feature_dim < 1:
            raise ValueError("token_dim and feature_dim must be >= 1")
        self.seed = seed & ((1 << 64) - 1)
        self.token_dim = token_dim
        self.feature_dim = feature_dim
        self.projection = projection_matrix(self.seed, feature_dim, token_dim)
        self._token_cache: dict[str, np.ndarray] = {}
        self._rest_cache: dict[tuple[str, ...], tuple[np.ndarray, int]] = {}

    @property
    def dim(self) -> int:
        return self.feature_dim

    def _embed_token(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            vec = token_embedding(token, self.seed, self.token_dim)
            self._token_cache[token] = vec
        return vec

    def _pooled_constants(self, tokens: tuple[str, ...]) -> tuple[np.ndarray, int]:
        """(sum of non-style token embeddings) / n_tokens, plus n_tokens."""
        cached = self._rest_cache.get(tokens)
        if cached is not None:
            return cached
        total = np.zeros(self.token_dim, dtype=np.float64)
        for tok in tokens:
            if tok != STYLE_SLOT:
                total = total + self._embed_token(tok)
        result = (total / len(tokens), len(tokens))
        self._rest_cache[tokens] = result
        return result

    def encode(
        self,
        template: PromptTemplate,
        style: np.ndarray | None = None,
        class_name: str | None = None,
        domain_name: str | None = None,
    ) -> np.ndarray:
        """Unit-norm feature vector (no gradient tracking)."""
        tokens = render_tokens(template, class_name, domain_name, keep_style_slot=template.has_style)
        rest, n_tokens = self._pooled_constants(tokens)
        if template.has_style:
            if style is None:
                raise ValueError("template has an unbound style slot")
            style = np.asarray(style, dtype=np.float64)
            if style.shape != (self.token_dim,):
                raise ValueError(f"style vector shape {style.shape} != ({self.token_dim},)")
            pooled = rest + style * (1.0 / n_tokens)  # matches the traced scale op bit-for-bit
        else:
            pooled = rest
        feature = self.projection @ pooled
        norm = float(np.linalg.norm(feature))
        if norm <= 1e-12:
            raise NumericError(f"encoder produced a near-zero feature for tokens {tokens}")
        return feature / norm

    def encode_traced(
        self,
        template: PromptTemplate,
        style: ad.Tensor,
        class_name: str | None = None,
        domain_name: str | None = None,
    ) -> ad.Tensor:
        """Same computation on a tape so d(feature)/d(style) is available."""
        if not template.has_style:
            raise ValueError("encode_traced requires a template with a style slot")
        tokens = render_tokens(template, class_name, domain_name, keep_style_slot=True)
        rest, n_tokens = self._pooled_constants(tokens)
        pooled = ad.add(style.tape.tensor(rest), ad.scale(style, 1.0 / n_tokens))
        feature = ad.matvec(style.tape.tensor(self.projection), pooled)
        return ad.l2_normalize(feature)

    def encode_classes(self, class_names: list[str] | tuple[str, ...]) -> np.ndarray:
        """Content features: one row per bare class-name prompt."""
        return np.stack([self.encode(CLASS_TEMPLATE, class_name=c) for c in class_names])


class FileEncoder:
    """Exact lookup of rendered prompts in stored features; never differentiable."""

    def __init__(self, prompts: dict[str, np.ndarray], dim: int):
        self._prompts = dict(prompts)
        self.dim = dim

    @classmethod
    def from_bundle(cls, bundle) -> "FileEncoder":
        prompts: dict[str, np.ndarray] = {}
        for j, name in enumerate(bundle.class_names):
            prompts[render_prompt(CLASS_TEMPLATE, class_name=name)] = bundle.content_features[j]
        n_domains = len(bundle.domain_names)
        for j, name in enumerate(bundle.class_names):
            for k, dom in enumerate(bundle.domain_names):
                key = render_prompt(DOMAIN_CLASS_TEMPLATE, class_name=name, domain_name=dom)
                prompts[key] = bundle.adapter_features[j * n_domains + k]
        return cls(prompts, bundle.dim)

    def encode(
        self,
        template: PromptTemplate,
        style: np.ndarray | None = None,
        class_name: str | None = None,
        domain_name: str | None = None,
    ) -> np.ndarray:
        if template.has_style:
            raise DataFormatError("file-backed encoder cannot encode style-slot prompts")
        key = render_prompt(template, class_name=class_name, domain_name=domain_name)
        feature = self._prompts.get(key)
        if feature is None:
            raise DataFormatError(f"no stored feature for prompt {key!r}")
        return feature

    def encode_classes(self, class_names: list[str] | tuple[str, ...]) -> np.ndarray:
        return np.stack([self.encode(CLASS_TEMPLATE, class_name=c) for c in class_names])
