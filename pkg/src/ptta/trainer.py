"""Joint SGD-momentum training of the linear head and adapter keys.

Each epoch optionally doubles the training set with freshly resampled style
features, shuffles with a seeded permutation, and minimizes cross-entropy
over the fused logits. Both learning rates follow one cosine schedule that
steps per batch. Gradients come from the reverse-mode tape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .adapter import LinearClassifier, TextAdapter, predict_batch
from .errors import ConfigError, NumericError
from .resampler import resample_epoch
from .rng import mix64
from .stylegen import StyleBank


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 128
    lr_classifier: float = 0.05
    lr_adapter: float = 0.01
    momentum: float = 0.9
    alpha: float = 1.0
    beta: float = 2.0
    sfr_enabled: bool = True
    ta_enabled: bool = True
    resample_per_batch: bool = False
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr_classifier <= 0 or self.lr_adapter <= 0:
            raise ConfigError("learning rates must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")

    def effective(self) -> "TrainConfig":
        """Copy with alpha forced to 0 when the adapter is disabled."""
        if self.ta_enabled:
            return replace(self)
        return replace(self, alpha=0.0)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_acc: float
    examples: int
    batches: int


@dataclass
class TrainTrace:
    epochs: list[EpochStats] = field(default_factory=list)

    def to_rows(self) -> list[tuple]:
        return [(e.epoch, e.loss, e.train_acc, e.examples, e.batches) for e in self.epochs]


def cosine_lr(base_lr: float, step: int, total_steps: int) -> float:
    """Half-cosine decay from base_lr to ~0 over total_steps."""
    if total_steps <= 0:
        raise ConfigError(f"total_steps must be positive, got {total_steps}")
    if not 0 <= step < total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps})")
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def sgd_step(
    param: np.ndarray,
    grad: np.ndarray,
    velocity: np.ndarray,
    lr: float,
    momentum: float,
    name: str = "parameter",
) -> None:
    """v <- momentum*v + g; p <- p - lr*v. No dampening, no Nesterov. In place."""
    if grad.shape != param.shape or velocity.shape != param.shape:
        raise ValueError(f"{name}: gradient/velocity shape mismatch")
    if not np.all(np.isfinite(grad)):
        raise NumericError(f"non-finite gradient for {name}")
    velocity *= momentum
    velocity += grad
    param -= lr * velocity


def fused_cross_entropy(
    X: np.ndarray,
    y: np.ndarray,
    wt: ad.Tensor,
    ft: ad.Tensor | None,
    labels: np.ndarray,
    alpha: float,
    beta: float,
) -> ad.Tensor:
    """Mean cross-entropy of the fused logits X@wt + alpha * phi(X@ft) @ labels.

    ``wt``/``ft`` are the transposed parameters (D x N and D x NK) as tape
    tensors; pass ``ft=None`` or ``alpha=0`` for the linear-only objective.
    """
    tape = wt.tape
    xb = tape.tensor(X)
    logits = ad.matmul(xb, wt)
    if ft is not None and alpha > 0.0:
        sims = ad.matmul(xb, ft)
        squashed = ad.exp(ad.add(ad.scale(sims, beta), tape.tensor(np.full(sims.shape, -beta))))
        adapter_part = ad.matmul(squashed, tape.tensor(labels))
        logits = ad.add(logits, ad.scale(adapter_part, alpha))
    return ad.log_softmax_cross_entropy(logits, y)


def _batch_loss(
    X: np.ndarray,
    y: np.ndarray,
    w_t: np.ndarray,
    f_t: np.ndarray | None,
    labels: np.ndarray,
    alpha: float,
    beta: float,
) -> tuple[float, np.ndarray, np.ndarray | None]:
    tape = ad.Tape()
    wt = tape.tensor(w_t, requires_grad=True, name="classifier weight")
    ft = tape.tensor(f_t, requires_grad=True, name="adapter keys") if f_t is not None else None
    loss = fused_cross_entropy(X, y, wt, ft, labels, alpha, beta)
    tape.backward(loss)
    grad_f = ft.grad if ft is not None and ft.grad is not None else None
    return loss.item(), wt.grad, grad_f


def fit(
    bank: StyleBank,
    classifier: LinearClassifier,
    adapter: TextAdapter,
    config: TrainConfig,
) -> TrainTrace:
    """Train the classifier weight and, when enabled, the adapter keys in place."""
    config.validate()
    cfg = config.effective()
    originals = bank.features
    orig_labels = bank.labels
    if classifier.weight.shape[1] != originals.shape[1]:
        raise ConfigError(
            f"classifier dim {classifier.weight.shape[1]} != feature dim {originals.shape[1]}"
        )
    if adapter.dim != originals.shape[1]:
        raise ConfigError(f"adapter dim {adapter.dim} != feature dim {originals.shape[1]}")

    n_original = originals.shape[0]
    n_per_epoch = 2 * n_original if cfg.sfr_enabled else n_original
    batches_per_epoch = math.ceil(n_per_epoch / cfg.batch_size)
    total_steps = cfg.epochs * batches_per_epoch

    # parameters are kept transposed while training so every batch is a plain matmul
    w_t = classifier.weight.T.copy()
    vel_w = np.zeros_like(w_t)
    train_adapter = cfg.ta_enabled
    f_t = adapter.keys.T.copy() if train_adapter else None
    vel_f = np.zeros_like(f_t) if train_adapter else None

    def assemble(draw_index: int) -> tuple[np.ndarray, np.ndarray]:
        drawn, drawn_labels = resample_epoch(bank, cfg.seed, draw_index)
        return (
            np.concatenate([originals, drawn], axis=0),
            np.concatenate([orig_labels, drawn_labels]),
        )

    shuffle_rng = np.random.default_rng(mix64(cfg.seed, 0x5487))
    trace = TrainTrace()
    step = 0
    for epoch in range(cfg.epochs):
        if cfg.sfr_enabled and not cfg.resample_per_batch:
            X, y = assemble(epoch)
        elif not cfg.sfr_enabled:
            X, y = originals, orig_labels
        perm = shuffle_rng.permutation(n_per_epoch)
        loss_sum = 0.0
        for b in range(batches_per_epoch):
            if cfg.sfr_enabled and cfg.resample_per_batch:
                # iteration cadence: the resampled half is refreshed every batch
                X, y = assemble(step)
            idx = perm[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            loss, grad_w, grad_f = _batch_loss(
                X[idx], y[idx], w_t, f_t, adapter.labels, cfg.alpha, cfg.beta
            )
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}, batch {b}")
            loss_sum += loss * idx.shape[0]
            sgd_step(
                w_t, grad_w, vel_w, cosine_lr(cfg.lr_classifier, step, total_steps), cfg.momentum,
                name="classifier weight",
            )
            if train_adapter:
                if grad_f is None:
                    grad_f = np.zeros_like(f_t)
                sgd_step(
                    f_t, grad_f, vel_f, cosine_lr(cfg.lr_adapter, step, total_steps), cfg.momentum,
                    name="adapter keys",
                )
                f_t /= np.linalg.norm(f_t, axis=0)[None, :]  # keys stay unit-norm
            step += 1
        classifier.weight = w_t.T.copy()
        if train_adapter:
            adapter.keys = f_t.T.copy()
        # trace accuracy uses the alpha actually trained with (0 when TA is off)
        trace_adapter = adapter if adapter.alpha == cfg.alpha else replace(adapter, alpha=cfg.alpha)
        acc = float(np.mean(predict_batch(originals, classifier, trace_adapter) == orig_labels))
        trace.epochs.append(
            EpochStats(
                epoch=epoch,
                loss=loss_sum / n_per_epoch,
                train_acc=acc,
                examples=n_per_epoch,
                batches=batches_per_epoch,
            )
        )
    return trace
