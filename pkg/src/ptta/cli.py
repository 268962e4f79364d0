"""Command-line entry point.

Subcommands: gen-styles, train, eval, synth, ablate, sweep. Every command is
a pure function of (config file, flags, input files): rerunning with the same
inputs produces byte-identical outputs. Exit codes: 0 ok, 2 usage/config
problems, 3 numeric/runtime failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .adapter import init_from_templates, init_random
from .bench import BenchConfig, EvalSet, evaluate, generate_synth
from .encoder import ToyEncoder
from .errors import ConfigError, DataFormatError, NumericError, PttaError
from .featio import FeatureBundle, read_bundle, write_bundle
from .model import ResidualAdapterClassifier, load_fitted, save_fitted
from .runconfig import RunConfig, load_config
from .stylegen import StyleBank, StyleGenConfig, train_styles


def _build_encoder(config: RunConfig) -> ToyEncoder:
    return ToyEncoder(
        seed=config.seed,
        token_dim=config.encoder.token_dim,
        feature_dim=config.encoder.feature_dim,
    )


def _bench_config(config: RunConfig) -> BenchConfig:
    return BenchConfig(
        class_names=tuple(config.class_names),
        domain_names=tuple(config.domain_names),
        encoder_token_dim=config.encoder.token_dim,
        encoder_feature_dim=config.encoder.feature_dim,
        stylegen=config.styles,
        train=config.train,
        synth=config.synth,
        adapter_init=config.adapter_init,
    )


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def cmd_gen_styles(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set)
    encoder = _build_encoder(config)
    bank = train_styles(config.styles, encoder, config.class_names)
    adapter_features = init_from_templates(encoder, config.class_names, config.domain_names)
    meta = {
        "encoder": {
            "kind": "toy",
            "seed": config.seed,
            "token_dim": config.encoder.token_dim,
            "feature_dim": config.encoder.feature_dim,
        },
        "styles": {k: v for k, v in asdict(config.styles).items()},
    }
    bundle = bank.to_bundle(tuple(config.domain_names), adapter_features, meta=meta)
    write_bundle(bundle, args.out)
    print(
        f"styles: M={config.styles.n_styles} N={len(config.class_names)} "
        f"D={config.encoder.feature_dim} -> {args.out}"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set)
    styles_dir = Path(args.styles)
    if not styles_dir.is_dir():
        raise ConfigError(f"styles directory not found: {styles_dir}")
    bundle = read_bundle(styles_dir)
    bank = StyleBank.from_bundle(bundle)
    if config.adapter_init == "template":
        adapter_features = bundle.adapter_features
        n_domains = bundle.n_domains
    else:
        adapter_features = None
        n_domains = bundle.n_domains
    model = ResidualAdapterClassifier(
        alpha=config.train.alpha,
        beta=config.train.beta,
        epochs=config.train.epochs,
        batch_size=config.train.batch_size,
        lr_classifier=config.train.lr_classifier,
        lr_adapter=config.train.lr_adapter,
        momentum=config.train.momentum,
        use_resampling=config.train.sfr_enabled,
        use_adapter=config.train.ta_enabled,
        resample_per_batch=config.train.resample_per_batch,
        adapter_features=adapter_features,
        n_domains=n_domains,
        seed=config.seed,
    )
    model.fit(bank.features, bank.labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_fitted(model, out, bundle.class_names, bundle.domain_names)
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epoch", "loss", "train_acc", "examples", "batches"])
        for row in model.trace_.to_rows():
            writer.writerow([row[0], repr(row[1]), repr(row[2]), row[3], row[4]])
    final = model.trace_.epochs[-1]
    print(
        f"trained: epochs={config.train.epochs} final_loss={final.loss:.6f} "
        f"train_acc={final.train_acc:.4f} -> {out}"
    )
    return 0


def _eval_set_from_bundle(bundle: FeatureBundle) -> EvalSet:
    if bundle.eval_features is None:
        raise ConfigError("data bundle has no evaluation block (eval_features/eval_labels)")
    if bundle.eval_domains is not None:
        names = tuple(bundle.meta.get("eval_domain_names", []))
        n_groups = int(bundle.eval_domains.max()) + 1
        if len(names) != n_groups:
            names = tuple(f"domain-{g}" for g in range(n_groups))
        domain_ids = bundle.eval_domains
    else:
        names = ("all",)
        domain_ids = np.zeros(bundle.eval_features.shape[0], dtype=np.int64)
    return EvalSet(
        features=bundle.eval_features,
        labels=bundle.eval_labels,
        domain_ids=domain_ids,
        domain_names=names,
    )


def cmd_eval(args: argparse.Namespace) -> int:
    model_dir = Path(args.model)
    if not model_dir.is_dir():
        raise ConfigError(f"model directory not found: {model_dir}")
    data_dir = Path(args.data)
    if not data_dir.is_dir():
        raise ConfigError(f"data directory not found: {data_dir}")
    model, class_names, _ = load_fitted(model_dir)
    for item in args.set or []:
        key, _, raw = item.partition("=")
        key = key.removeprefix("train.")
        if key not in ("alpha", "beta"):
            raise ConfigError(f"eval supports --set alpha=... and beta=..., got {item!r}")
        try:
            value = float(json.loads(raw))
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise ConfigError(f"--set {item!r}: expected a number") from exc
        if key == "alpha":
            model.adapter_.alpha = value
        else:
            model.adapter_.beta = value
    bundle = read_bundle(data_dir)
    if tuple(bundle.class_names) != tuple(class_names):
        raise DataFormatError(
            f"model classes {list(class_names)} != data classes {list(bundle.class_names)}"
        )
    eval_set = _eval_set_from_bundle(bundle)
    report = evaluate(model, eval_set)
    report.config = {"alpha": model.adapter_.alpha, "beta": model.adapter_.beta}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    print(f"eval: mean_acc={report.mean_accuracy:.4f} over {len(report.per_domain)} domain(s) -> {out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set)
    encoder = _build_encoder(config)
    eval_set = generate_synth(encoder, tuple(config.class_names), config.synth)
    content = encoder.encode_classes(config.class_names)
    adapter_features = init_from_templates(encoder, config.class_names, config.domain_names)
    bundle = FeatureBundle(
        class_names=tuple(config.class_names),
        domain_names=tuple(config.domain_names),
        content_features=content,
        adapter_features=adapter_features,
        eval_features=eval_set.features,
        eval_labels=eval_set.labels,
        eval_domains=eval_set.domain_ids,
        meta={"eval_domain_names": list(eval_set.domain_names), "synth": asdict(config.synth)},
    )
    write_bundle(bundle, args.out)
    print(
        f"synth: {eval_set.features.shape[0]} samples, {config.synth.n_domains} domains, "
        f"N={len(config.class_names)} -> {args.out}"
    )
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set)
    cells = bench_mod.run_ablation(_bench_config(config), config.bench.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bench_mod.write_ablation_csv(cells, out / "ablation.csv")
    _write_json(out / "ablation.json", {"cells": [asdict(c) for c in cells], "seeds": config.bench.seeds})
    for cell in cells:
        print(f"{cell.label():>10}: {cell.mean_acc:.4f} +/- {cell.std_acc:.4f}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set)
    rows = bench_mod.sweep_alpha_beta(
        _bench_config(config),
        config.bench.seeds,
        tuple(config.bench.alpha_grid),
        tuple(config.bench.beta_grid),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bench_mod.write_sweep_csv(rows, out / "sweep.csv")
    print(f"sweep: {len(rows)} grid points -> {out / 'sweep.csv'}")
    return 0


def cmd_init_compare(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set)
    rows = bench_mod.run_init_comparison(_bench_config(config), config.bench.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bench_mod.write_init_comparison_csv(rows, out / "init_comparison.csv")
    _write_json(out / "init_comparison.json", {"rows": [asdict(r) for r in rows], "seeds": config.bench.seeds})
    for row in rows:
        print(f"{row.init:>10}: {row.mean_acc:.4f} +/- {row.std_acc:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptta",
        description="Style-prompt training, feature resampling and text-adapter classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    formatter = argparse.ArgumentDefaultsHelpFormatter

    def common(p: argparse.ArgumentParser, needs_config: bool = True) -> None:
        if needs_config:
            p.add_argument("--config", default=None, help="JSON config file (defaults used when omitted)")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config value, e.g. --set train.epochs=10 (repeatable)",
        )
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("gen-styles", help="learn style vectors and write the frozen style bundle", formatter_class=formatter)
    common(p)
    p.set_defaults(func=cmd_gen_styles)

    p = sub.add_parser("train", help="train classifier and adapter on a style bundle", formatter_class=formatter)
    p.add_argument("--styles", required=True, help="style bundle directory from gen-styles or the extractor")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model on a bundle with an eval block", formatter_class=formatter)
    p.add_argument("--model", required=True, help="model directory from train")
    p.add_argument("--data", required=True, help="bundle directory with eval features and labels")
    common(p, needs_config=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic domain-shift evaluation bundle", formatter_class=formatter)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ablate", help="run the 4-cell resampling/adapter ablation", formatter_class=formatter)
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="run the alpha/beta sensitivity sweep", formatter_class=formatter)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("init-compare", help="compare random vs template adapter initialization", formatter_class=formatter)
    common(p)
    p.set_defaults(func=cmd_init_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, PttaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # unexpected runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
