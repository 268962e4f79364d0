"""Synthetic domain-shift benchmark and the experiment harness.

Synthetic "image" features live in the same toy embedding space as the text
features: each unseen domain is a random shift of the class anchors plus
per-sample noise, renormalized onto the unit sphere. The harness runs the
component ablation (resampling x adapter), the adapter-initialization
comparison, and the alpha/beta sensitivity sweep, all seeded end to end.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .adapter import init_from_templates
from .encoder import ToyEncoder
from .errors import ConfigError
from .model import ResidualAdapterClassifier
from .rng import GaussianStream, mix64
from .stylegen import StyleBank, StyleGenConfig, train_styles
from .trainer import TrainConfig


@dataclass
class SynthConfig:
    n_domains: int = 4  # unseen evaluation domains
    samples_per_class: int = 50
    domain_shift: float = 0.4
    noise: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.n_domains < 1:
            raise ConfigError(f"n_domains must be >= 1, got {self.n_domains}")
        if self.samples_per_class < 1:
            raise ConfigError(f"samples_per_class must be >= 1, got {self.samples_per_class}")
        if self.domain_shift < 0 or self.noise < 0:
            raise ConfigError("domain_shift and noise must be >= 0")


@dataclass
class EvalSet:
    features: np.ndarray  # Q x D
    labels: np.ndarray  # Q
    domain_ids: np.ndarray  # Q
    domain_names: tuple[str, ...]


@dataclass
class EvalReport:
    per_domain: dict[str, float]
    mean_accuracy: float
    seeds: list[int]
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def generate_synth(encoder: ToyEncoder, class_names: tuple[str, ...], config: SynthConfig) -> EvalSet:
    """Per-domain shifted, noisy copies of the class anchors, unit-normalized."""
    config.validate()
    anchors = encoder.encode_classes(class_names)
    n_classes, dim = anchors.shape
    stream = GaussianStream(mix64(config.seed, 0x5E7))
    total = config.n_domains * n_classes * config.samples_per_class
    features = np.zeros((total, dim), dtype=np.float64)
    labels = np.zeros(total, dtype=np.int64)
    domain_ids = np.zeros(total, dtype=np.int64)
    row = 0
    for g in range(config.n_domains):
        shift = config.domain_shift * np.array(stream.normals(dim), dtype=np.float64)
        for j in range(n_classes):
            for _ in range(config.samples_per_class):
                for _attempt in range(2):
                    noise = config.noise * np.array(stream.normals(dim), dtype=np.float64)
                    sample = anchors[j] + shift + noise
                    norm = float(np.linalg.norm(sample))
                    if norm >= 1e-12:
                        break
                else:
                    raise ConfigError(f"synthetic sample for class {j}, domain {g} collapsed to zero twice")
                features[row] = sample / norm
                labels[row] = j
                domain_ids[row] = g
                row += 1
    names = tuple(f"shift-{g}" for g in range(config.n_domains))
    return EvalSet(features=features, labels=labels, domain_ids=domain_ids, domain_names=names)


def evaluate(model: ResidualAdapterClassifier, eval_set: EvalSet, seeds: list[int] | None = None) -> EvalReport:
    """Top-1 accuracy per domain and overall; never mutates the model."""
    if eval_set.features.shape[0] == 0:
        raise ConfigError("evaluation set is empty")
    predictions = model.predict(eval_set.features)
    per_domain: dict[str, float] = {}
    for g, name in enumerate(eval_set.domain_names):
        mask = eval_set.domain_ids == g
        if not mask.any():
            continue
        per_domain[name] = float(np.mean(predictions[mask] == eval_set.labels[mask]))
    mean_acc = float(np.mean(list(per_domain.values())))
    return EvalReport(per_domain=per_domain, mean_accuracy=mean_acc, seeds=list(seeds or []))


@dataclass
class BenchConfig:
    """Everything one benchmark run needs, seed excluded (seeds come per run)."""

    class_names: tuple[str, ...]
    domain_names: tuple[str, ...]
    encoder_token_dim: int = 32
    encoder_feature_dim: int = 64
    stylegen: StyleGenConfig = field(default_factory=StyleGenConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    adapter_init: str = "template"  # or "random"

    def validate(self) -> None:
        if len(self.class_names) < 2:
            raise ConfigError("benchmark needs at least two class names")
        if len(self.domain_names) < 1:
            raise ConfigError("benchmark needs at least one domain name")
        if self.adapter_init not in ("template", "random"):
            raise ConfigError(f"adapter_init must be 'template' or 'random', got {self.adapter_init!r}")
        self.stylegen.validate()
        self.train.validate()
        self.synth.validate()


@dataclass
class _SeedAssets:
    encoder: ToyEncoder
    bank: StyleBank
    eval_set: EvalSet
    template_keys: np.ndarray


def _prepare_seed(config: BenchConfig, seed: int) -> _SeedAssets:
    encoder = ToyEncoder(seed=seed, token_dim=config.encoder_token_dim, feature_dim=config.encoder_feature_dim)
    stylegen_cfg = StyleGenConfig(**{**asdict(config.stylegen), "seed": seed})
    bank = train_styles(stylegen_cfg, encoder, config.class_names)
    synth_cfg = SynthConfig(**{**asdict(config.synth), "seed": seed})
    eval_set = generate_synth(encoder, config.class_names, synth_cfg)
    template_keys = init_from_templates(encoder, config.class_names, config.domain_names)
    return _SeedAssets(encoder=encoder, bank=bank, eval_set=eval_set, template_keys=template_keys)


def _train_model(
    config: BenchConfig,
    assets: _SeedAssets,
    seed: int,
    sfr: bool,
    ta: bool,
    alpha: float | None = None,
    beta: float | None = None,
    adapter_init: str | None = None,
) -> ResidualAdapterClassifier:
    init = adapter_init if adapter_init is not None else config.adapter_init
    model = ResidualAdapterClassifier(
        alpha=config.train.alpha if alpha is None else alpha,
        beta=config.train.beta if beta is None else beta,
        epochs=config.train.epochs,
        batch_size=config.train.batch_size,
        lr_classifier=config.train.lr_classifier,
        lr_adapter=config.train.lr_adapter,
        momentum=config.train.momentum,
        use_resampling=sfr,
        use_adapter=ta,
        resample_per_batch=config.train.resample_per_batch,
        adapter_features=assets.template_keys if init == "template" else None,
        n_domains=len(config.domain_names),
        seed=seed,
    )
    return model.fit(assets.bank.features, assets.bank.labels)


@dataclass
class AblationCell:
    sfr: bool
    ta: bool
    mean_acc: float
    std_acc: float
    per_seed: list[float]

    def label(self) -> str:
        return f"({'SFR' if self.sfr else '-'},{'TA' if self.ta else '-'})"


def run_ablation(config: BenchConfig, seeds: list[int]) -> list[AblationCell]:
    """The four resampling/adapter toggles trained from one style bank per seed."""
    config.validate()
    if len(seeds) < 3:
        raise ConfigError(f"ablation needs at least 3 seeds, got {len(seeds)}")
    toggles = [(False, False), (True, False), (False, True), (True, True)]
    accs: dict[tuple[bool, bool], list[float]] = {t: [] for t in toggles}
    for seed in seeds:
        assets = _prepare_seed(config, seed)
        for sfr, ta in toggles:
            model = _train_model(config, assets, seed, sfr=sfr, ta=ta)
            report = evaluate(model, assets.eval_set)
            accs[(sfr, ta)].append(report.mean_accuracy)
    return [
        AblationCell(
            sfr=sfr,
            ta=ta,
            mean_acc=float(np.mean(accs[(sfr, ta)])),
            std_acc=float(np.std(accs[(sfr, ta)])),
            per_seed=[float(a) for a in accs[(sfr, ta)]],
        )
        for sfr, ta in toggles
    ]


@dataclass
class InitComparisonRow:
    init: str
    mean_acc: float
    std_acc: float
    per_seed: list[float]


def run_init_comparison(config: BenchConfig, seeds: list[int]) -> list[InitComparisonRow]:
    """Random vs template adapter keys; everything else identical."""
    config.validate()
    if len(seeds) < 3:
        raise ConfigError(f"init comparison needs at least 3 seeds, got {len(seeds)}")
    accs: dict[str, list[float]] = {"random": [], "template": []}
    for seed in seeds:
        assets = _prepare_seed(config, seed)
        for init in ("random", "template"):
            model = _train_model(config, assets, seed, sfr=True, ta=True, adapter_init=init)
            report = evaluate(model, assets.eval_set)
            accs[init].append(report.mean_accuracy)
    return [
        InitComparisonRow(
            init=init,
            mean_acc=float(np.mean(accs[init])),
            std_acc=float(np.std(accs[init])),
            per_seed=[float(a) for a in accs[init]],
        )
        for init in ("random", "template")
    ]


DEFAULT_SWEEP_GRID = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass
class SweepRow:
    alpha: float
    beta: float
    mean_acc: float
    std_acc: float


def sweep_alpha_beta(
    config: BenchConfig,
    seeds: list[int],
    alpha_grid: tuple[float, ...] = DEFAULT_SWEEP_GRID,
    beta_grid: tuple[float, ...] = DEFAULT_SWEEP_GRID,
) -> list[SweepRow]:
    """One trained model per (alpha, beta) grid point and seed."""
    config.validate()
    if not alpha_grid or not beta_grid:
        raise ConfigError("sweep grids must be non-empty")
    if not seeds:
        raise ConfigError("sweep needs at least one seed")
    assets_by_seed = {seed: _prepare_seed(config, seed) for seed in seeds}
    rows: list[SweepRow] = []
    for alpha in alpha_grid:
        for beta in beta_grid:
            accs = []
            for seed in seeds:
                model = _train_model(
                    config, assets_by_seed[seed], seed, sfr=True, ta=True, alpha=alpha, beta=beta
                )
                accs.append(evaluate(model, assets_by_seed[seed].eval_set).mean_accuracy)
            rows.append(
                SweepRow(
                    alpha=float(alpha),
                    beta=float(beta),
                    mean_acc=float(np.mean(accs)),
                    std_acc=float(np.std(accs)),
                )
            )
    return rows


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["alpha", "beta", "mean_acc", "std_acc"])
        for row in rows:
            writer.writerow([repr(row.alpha), repr(row.beta), repr(row.mean_acc), repr(row.std_acc)])


def write_ablation_csv(cells: list[AblationCell], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sfr", "ta", "mean_acc", "std_acc"])
        for cell in cells:
            writer.writerow([int(cell.sfr), int(cell.ta), repr(cell.mean_acc), repr(cell.std_acc)])


def write_init_comparison_csv(rows: list[InitComparisonRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["init", "mean_acc", "std_acc"])
        for row in rows:
            writer.writerow([row.init, repr(row.mean_acc), repr(row.std_acc)])
