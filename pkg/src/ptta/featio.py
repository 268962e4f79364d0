"""Binary feature matrices ("PTAF") and feature-bundle directories.

The byte layout is the interop contract with the standalone extractor:
magic ``PTAF``, format version u32 = 1, row count u32, dim u32, flags u32
(bit 0 = rows are unit-norm), then row-major IEEE-754 binary32 values, all
little-endian. A bundle directory holds one ``manifest.json`` plus one
``.ptaf`` file per matrix.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError

MAGIC = b"PTAF"
FORMAT_VERSION = 1
FLAG_UNIT_NORM = 1
UNIT_NORM_TOL = 1e-3  # binary32 storage tolerance

MANIFEST_NAME = "manifest.json"


@dataclass
class FeatureMatrix:
    data: np.ndarray  # R x D, float64 in memory
    unit_norm: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DataFormatError(f"feature matrix must be 2-D with R, D >= 1, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise DataFormatError("feature matrix contains non-finite values")
        if self.unit_norm:
            norms = np.linalg.norm(self.data, axis=1)
            worst = float(np.abs(norms - 1.0).max())
            if worst > UNIT_NORM_TOL:
                raise DataFormatError(f"matrix flagged unit_norm has row norm off by {worst:.2e} (> {UNIT_NORM_TOL})")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def write_matrix(matrix: FeatureMatrix | np.ndarray, path: str | Path, unit_norm: bool | None = None) -> None:
    if not isinstance(matrix, FeatureMatrix):
        matrix = FeatureMatrix(matrix, unit_norm=bool(unit_norm))
    elif unit_norm is not None:
        matrix = FeatureMatrix(matrix.data, unit_norm=unit_norm)
    flags = FLAG_UNIT_NORM if matrix.unit_norm else 0
    header = MAGIC + struct.pack("<III", FORMAT_VERSION, matrix.rows, matrix.dim) + struct.pack("<I", flags)
    payload = matrix.data.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(header + payload)


def read_matrix(path: str | Path) -> FeatureMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < 20:
        raise DataFormatError(f"{path}: truncated header ({len(raw)} bytes, need 20)")
    if raw[:4] != MAGIC:
        raise DataFormatError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, rows, dim, flags = struct.unpack("<IIII", raw[4:20])
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version {version}")
    expected = 20 + 4 * rows * dim
    if len(raw) != expected:
        raise DataFormatError(f"{path}: payload length {len(raw)} != expected {expected} for {rows}x{dim}")
    values = np.frombuffer(raw, dtype="<f4", offset=20).astype(np.float64).reshape(rows, dim)
    if not np.all(np.isfinite(values)):
        raise DataFormatError(f"{path}: non-finite value in payload")
    return FeatureMatrix(values, unit_norm=bool(flags & FLAG_UNIT_NORM))


@dataclass
class FeatureBundle:
    """Everything the core needs to run file-backed: names plus feature blocks.

    ``adapter_features`` rows are class-major: row index = class * K + domain.
    Optional ``style_features`` rows are class-major as well (class * M + style).
    """

    class_names: tuple[str, ...]
    domain_names: tuple[str, ...]
    content_features: np.ndarray  # N x D
    adapter_features: np.ndarray  # N*K x D
    style_features: np.ndarray | None = None  # N*M x D
    style_vectors: np.ndarray | None = None  # M x d_tok (toy-encoder banks only)
    eval_features: np.ndarray | None = None  # Q x D
    eval_labels: np.ndarray | None = None  # Q ints in [0, N)
    eval_domains: np.ndarray | None = None  # Q ints (optional grouping)
    meta: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_domains(self) -> int:
        return len(self.domain_names)

    @property
    def dim(self) -> int:
        return self.content_features.shape[1]

    @property
    def styles_per_class(self) -> int | None:
        if self.style_features is None:
            return None
        return self.style_features.shape[0] // self.n_classes

    def style_labels(self) -> np.ndarray:
        """Class index per style-feature row (class-major layout)."""
        if self.style_features is None:
            raise DataFormatError("bundle has no style features")
        m = self.styles_per_class
        return np.repeat(np.arange(self.n_classes, dtype=np.int64), m)

    def validate(self) -> None:
        n, k = self.n_classes, self.n_domains
        if n < 1 or k < 1:
            raise DataFormatError("bundle needs at least one class and one domain name")
        d = self.dim
        if self.content_features.shape != (n, d):
            raise DataFormatError(
                f"content_features shape {self.content_features.shape} inconsistent with {n} classes, dim {d}"
            )
        if self.adapter_features.shape != (n * k, d):
            raise DataFormatError(
                f"adapter_features shape {self.adapter_features.shape} != expected ({n * k}, {d})"
            )
        if self.style_features is not None:
            if self.style_features.shape[1] != d:
                raise DataFormatError(
                    f"style_features dim {self.style_features.shape[1]} != bundle dim {d}"
                )
            if self.style_features.shape[0] % n != 0:
                raise DataFormatError(
                    f"style_features rows {self.style_features.shape[0]} not a multiple of {n} classes"
                )
        if (self.eval_features is None) != (self.eval_labels is None):
            raise DataFormatError("eval_features and eval_labels must be present together")
        if self.eval_features is not None:
            if self.eval_features.shape[1] != d:
                raise DataFormatError(
                    f"eval_features dim {self.eval_features.shape[1]} != bundle dim {d}"
                )
            q = self.eval_features.shape[0]
            if self.eval_labels.shape != (q,):
                raise DataFormatError(
                    f"eval_labels shape {self.eval_labels.shape} != expected ({q},)"
                )
            if self.eval_labels.min() < 0 or self.eval_labels.max() >= n:
                raise DataFormatError("eval_labels contain indices outside [0, n_classes)")
            if self.eval_domains is not None and self.eval_domains.shape != (q,):
                raise DataFormatError(
                    f"eval_domains shape {self.eval_domains.shape} != expected ({q},)"
                )


_MATRIX_FILES = {
    "content_features": ("content_features.ptaf", True),
    "adapter_features": ("adapter_features.ptaf", True),
    "style_features": ("style_features.ptaf", True),
    "style_vectors": ("style_vectors.ptaf", False),
    "eval_features": ("eval_features.ptaf", True),
}


def write_bundle(bundle: FeatureBundle, directory: str | Path) -> None:
    bundle.validate()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    matrices: dict[str, str] = {}
    for attr, (filename, unit_norm) in _MATRIX_FILES.items():
        data = getattr(bundle, attr)
        if data is None:
            continue
        write_matrix(FeatureMatrix(data, unit_norm=unit_norm), directory / filename)
        matrices[attr] = filename
    manifest = {
        "format": "ptta-bundle",
        "version": FORMAT_VERSION,
        "dim": bundle.dim,
        "class_names": list(bundle.class_names),
        "domain_names": list(bundle.domain_names),
        "matrices": matrices,
        "meta": bundle.meta,
    }
    if bundle.eval_labels is not None:
        manifest["eval_labels"] = "eval_labels.json"
        _write_json(directory / "eval_labels.json", {"labels": [int(v) for v in bundle.eval_labels]})
    if bundle.eval_domains is not None:
        manifest["eval_domains"] = "eval_domains.json"
        _write_json(directory / "eval_domains.json", {"domains": [int(v) for v in bundle.eval_domains]})
    _write_json(directory / MANIFEST_NAME, manifest)


def read_bundle(directory: str | Path) -> FeatureBundle:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DataFormatError(f"{directory}: missing {MANIFEST_NAME}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{manifest_path}: invalid JSON ({exc})") from exc
    for key in ("dim", "class_names", "domain_names", "matrices"):
        if key not in manifest:
            raise DataFormatError(f"{manifest_path}: missing key {key!r}")
    dim = int(manifest["dim"])
    loaded: dict[str, np.ndarray] = {}
    for attr, filename in manifest["matrices"].items():
        if attr not in _MATRIX_FILES:
            raise DataFormatError(f"{manifest_path}: unknown matrix entry {attr!r}")
        matrix = read_matrix(directory / filename)
        if attr != "style_vectors" and matrix.dim != dim:
            raise DataFormatError(
                f"{filename}: matrix shape {matrix.data.shape} disagrees with manifest dim {dim}"
            )
        loaded[attr] = matrix.data
    for required in ("content_features", "adapter_features"):
        if required not in loaded:
            raise DataFormatError(f"{manifest_path}: bundle is missing {required}")
    eval_labels = None
    if "eval_labels" in manifest:
        payload = json.loads((directory / manifest["eval_labels"]).read_text(encoding="utf-8"))
        eval_labels = np.asarray(payload["labels"], dtype=np.int64)
    eval_domains = None
    if "eval_domains" in manifest:
        payload = json.loads((directory / manifest["eval_domains"]).read_text(encoding="utf-8"))
        eval_domains = np.asarray(payload["domains"], dtype=np.int64)
    bundle = FeatureBundle(
        class_names=tuple(manifest["class_names"]),
        domain_names=tuple(manifest["domain_names"]),
        content_features=loaded["content_features"],
        adapter_features=loaded["adapter_features"],
        style_features=loaded.get("style_features"),
        style_vectors=loaded.get("style_vectors"),
        eval_features=loaded.get("eval_features"),
        eval_labels=eval_labels,
        eval_domains=eval_domains,
        meta=manifest.get("meta", {}),
    )
    bundle.validate()
    return bundle


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
