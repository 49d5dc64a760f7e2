"""Matrix and dataset-directory formats, experiment configs and result rendering.

Matrices are stored either as plain numeric CSV (one row per line, ``#``
comment lines ignored, an optional ``# rows,cols`` first line checked when
present) or in the ``GDM1`` binary layout::

    b"GDM1" | rows: uint32 LE | cols: uint32 LE | rows*cols float64 LE, row-major

The loader picks the format from the magic bytes.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import re
import struct
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .core import (
    METRICS,
    MODEL_KINDS,
    ROI_ORDER,
    Dataset,
    DecodingError,
    ExperimentConfig,
    KernelParams,
    MlpSettings,
    PrototypeSet,
    RegressorSpec,
    ResultRecord,
    ResultsTable,
    RoiMask,
    as_labels,
    validate_dataset,
)

MAGIC = b"GDM1"
_HEADER = struct.Struct("<4sII")


class MatrixFormatError(DecodingError, ValueError):
    pass


class ConfigError(DecodingError, ValueError):
    pass


# -- matrices --------------------------------------------------------------


def save_matrix(path, m, format="csv"):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise MatrixFormatError(f"expected a 2-D matrix, got {m.ndim}-D")
    path = Path(path)
    if format == "binary":
        rows, cols = m.shape
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, rows, cols))
            fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())
    elif format == "csv":
        lines = [f"# {m.shape[0]},{m.shape[1]}"]
        lines += [",".join(format_float(v) for v in row) for row in m]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown matrix format {format!r}")
    return path


def format_float(v) -> str:
    # 17 significant digits round-trip every float64
    return format(float(v), ".17g")


def _load_binary(raw: bytes, path) -> np.ndarray:
    if len(raw) < _HEADER.size:
        raise MatrixFormatError(f"{path}: truncated GDM1 header")
    _, rows, cols = _HEADER.unpack_from(raw)
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise MatrixFormatError(f"{path}: expected {expected} bytes for {rows}x{cols}, got {len(raw)}")
    return np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(np.float64)


def _load_csv(text: str, path) -> np.ndarray:
    declared = None
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            match = re.fullmatch(r"#\s*(\d+)\s*,\s*(\d+)\s*", line)
            if match and not rows and declared is None:
                declared = (int(match[1]), int(match[2]))
            continue
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise MatrixFormatError(f"{path}:{lineno}: non-numeric entry") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MatrixFormatError(
                f"{path}:{lineno}: row has {len(row)} columns, expected {width}"
            )
        rows.append(row)
    if not rows:
        raise MatrixFormatError(f"{path}: no data rows")
    m = np.array(rows, dtype=np.float64)
    if declared is not None and declared != m.shape:
        raise MatrixFormatError(f"{path}: header declares {declared}, data is {m.shape}")
    return m


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == MAGIC:
        m = _load_binary(raw, path)
    else:
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise MatrixFormatError(f"{path}: neither GDM1 binary nor UTF-8 CSV") from None
        m = _load_csv(text, path)
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise MatrixFormatError(f"{path}: empty matrix {m.shape}")
    if not np.all(np.isfinite(m)):
        bad = np.argwhere(~np.isfinite(m))[0]
        raise MatrixFormatError(f"{path}: non-finite entry at row {bad[0]}, column {bad[1]}")
    return m


def load_labels(path) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    return as_labels(line.strip() for line in lines)


def save_labels(path, labels):
    Path(path).write_text("".join(f"{lab}\n" for lab in as_labels(labels)), encoding="utf-8")


# -- dataset directories ---------------------------------------------------

MATRIX_SUFFIXES = ("", ".csv", ".gdm", ".bin")
LABEL_SUFFIXES = ("", ".txt")
ROI_MANIFESTS = ("rois.yaml", "rois.yml", "rois.json")


def _find(directory: Path, stem, suffixes, required=True):
    for suffix in suffixes:
        candidate = directory / f"{stem}{suffix}"
        if candidate.is_file():
            return candidate
    if required:
        raise DecodingError(f"{directory}: missing required file {stem!r}")
    return None


def resolve_rois(manifest: dict, n_columns: int) -> tuple[RoiMask, ...]:
    """Turn a ROI manifest into masks.

    Each entry maps a name to ``"all"``, an explicit index list,
    ``{"range": [start, stop]}`` or ``{"union": [names...]}``.
    """
    if not isinstance(manifest, dict):
        raise DecodingError("roi manifest must be a mapping of name -> definition")
    manifest = {str(k): v for k, v in manifest.items()}
    resolved: dict[str, RoiMask] = {}

    def build(name, stack=()):
        if name in resolved:
            return resolved[name]
        if name in stack:
            raise DecodingError(f"roi manifest: cyclic union through {name!r}")
        if name not in manifest:
            raise DecodingError(f"roi manifest: unknown roi {name!r}")
        spec = manifest[name]
        if spec == "all":
            mask = RoiMask.full(n_columns, name)
        elif isinstance(spec, list):
            mask = RoiMask(name, tuple(int(i) for i in spec))
        elif isinstance(spec, dict) and set(spec) == {"range"}:
            start, stop = spec["range"]
            mask = RoiMask(name, tuple(range(int(start), int(stop))))
        elif isinstance(spec, dict) and set(spec) == {"union"}:
            mask = RoiMask.union(name, [build(p, stack + (name,)) for p in spec["union"]])
        else:
            raise DecodingError(f"roi manifest: cannot interpret entry {name!r}")
        resolved[name] = mask
        return mask

    return tuple(build(name) for name in manifest)


def load_dataset(directory, validate=True) -> Dataset:
    """Load a dataset directory.

    Required: ``train_x``, ``train_y``, ``train_labels``, ``test_x``,
    ``test_labels``. Optional: ``test_y``, ``prototypes`` together with
    ``prototype_labels``, and a ``rois.{yaml,json}`` manifest (a single
    full-width ``VC`` mask when absent). Matrix files may carry a
    ``.csv``/``.gdm``/``.bin`` suffix, label files ``.txt``.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DecodingError(f"{directory}: not a directory")

    def mat(stem, required=True):
        path = _find(directory, stem, MATRIX_SUFFIXES, required)
        return None if path is None else load_matrix(path)

    train_x = mat("train_x")
    test_y = mat("test_y", required=False)

    protos = None
    proto_m = mat("prototypes", required=False)
    if proto_m is not None:
        proto_labels = load_labels(_find(directory, "prototype_labels", LABEL_SUFFIXES))
        protos = PrototypeSet(tuple(proto_labels), proto_m)

    manifest_path = next((directory / n for n in ROI_MANIFESTS if (directory / n).is_file()), None)
    if manifest_path is None:
        rois = (RoiMask.full(train_x.shape[1]),)
    else:
        rois = resolve_rois(yaml.safe_load(manifest_path.read_text(encoding="utf-8")) or {},
                            train_x.shape[1])

    d = Dataset(
        train_x=train_x,
        train_y=mat("train_y"),
        train_labels=load_labels(_find(directory, "train_labels", LABEL_SUFFIXES)),
        test_x=mat("test_x"),
        test_labels=load_labels(_find(directory, "test_labels", LABEL_SUFFIXES)),
        test_y=test_y,
        rois=rois,
        prototypes=protos,
    )
    if validate:
        report = validate_dataset(d)
        if not report.ok:
            raise DecodingError(f"{directory}: invalid dataset: {'; '.join(report.violations)}")
    return d


def save_dataset(d: Dataset, directory, format="csv") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if format == "csv" else ".gdm"
    for name in ("train_x", "train_y", "test_x", "test_y"):
        m = getattr(d, name)
        if m is not None:
            save_matrix(directory / f"{name}{ext}", m, format)
    save_labels(directory / "train_labels.txt", d.train_labels)
    save_labels(directory / "test_labels.txt", d.test_labels)
    if d.prototypes is not None:
        save_matrix(directory / f"prototypes{ext}", d.prototypes.prototypes, format)
        save_labels(directory / "prototype_labels.txt", d.prototypes.classes)
    manifest = {m.name: list(m.indices) for m in d.rois}
    (directory / "rois.json").write_text(json.dumps(manifest) + "\n", encoding="utf-8")
    return directory


# -- experiment configs ----------------------------------------------------

_MODEL_FIELDS = {
    "kind": {"enum": list(MODEL_KINDS)},
    "name": {"type": "string", "minLength": 1},
    "k": {"type": "integer", "minimum": 1},
    "lambda": {"type": "number", "minimum": 0},
    "degree": {"type": "integer", "minimum": 1},
    "coef": {"type": "number"},
    "gamma": {"anyOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "auto"}]},
    "hidden_units": {"type": "integer", "minimum": 1},
    "activation": {"const": "sigmoid"},
    "epochs": {"type": "integer", "minimum": 0},
    "batch_size": {"type": "integer", "minimum": 1},
    "learning_rate": {"type": "number", "exclusiveMinimum": 0},
    "dropout_rate": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    "seed": {"type": "integer"},
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["dataset", "models"],
    "additionalProperties": False,
    "properties": {
        "dataset": {"type": "string", "minLength": 1},
        "models": {
            "type": "array",
            "items": {
                "anyOf": [
                    {"enum": list(MODEL_KINDS)},
                    {
                        "type": "object",
                        "required": ["kind"],
                        "additionalProperties": False,
                        "properties": _MODEL_FIELDS,
                    },
                ]
            },
        },
        "metrics": {"type": "array", "items": {"enum": list(METRICS)}, "minItems": 1},
        "rois": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "seed": {"type": "integer"},
        "output": {"type": "string", "minLength": 1},
        "n_jobs": {"type": "integer", "minimum": 1},
    },
}


def _field_path(error) -> str:
    parts = ["config"]
    for p in error.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else f".{p}")
    return "".join(parts)


def _spec_from_entry(entry) -> RegressorSpec:
    if isinstance(entry, str):
        return RegressorSpec.default(entry)
    entry = dict(entry)
    kind = entry.pop("kind")
    base = RegressorSpec.default(kind)
    kernel = KernelParams(
        degree=entry.pop("degree", base.kernel.degree),
        coef=float(entry.pop("coef", base.kernel.coef)),
        gamma=entry.pop("gamma", base.kernel.gamma),
    )
    mlp_fields = {k: entry.pop(k) for k in list(entry) if k in MlpSettings.__dataclass_fields__}
    mlp = MlpSettings(**{**base.mlp.__dict__, **mlp_fields})
    return RegressorSpec(
        kind=kind,
        name=entry.pop("name", kind),
        k=entry.pop("k", base.k),
        lam=float(entry.pop("lambda", base.lam)),
        kernel=kernel,
        mlp=mlp,
    )


def config_from_dict(raw, base_dir=".") -> ExperimentConfig:
    """Validate a config mapping and fill unspecified model fields with the defaults."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_field_path(e)}: {e.message}")
    base_dir = Path(base_dir)
    specs = []
    for i, entry in enumerate(raw["models"]):
        try:
            specs.append(_spec_from_entry(entry))
        except DecodingError as exc:
            raise ConfigError(f"config.models[{i}]: {exc}") from None
    try:
        return ExperimentConfig(
            dataset=str(base_dir / raw["dataset"]),
            models=tuple(specs),
            metrics=tuple(raw.get("metrics", ["pearson"])),
            rois=tuple(raw.get("rois", ["all"])),
            output=str(base_dir / raw.get("output", "results")),
            seed=raw.get("seed", 0),
            n_jobs=raw.get("n_jobs", 1),
        )
    except DecodingError as exc:
        raise ConfigError(f"config: {exc}") from None


def parse_config(path) -> ExperimentConfig:
    """Read a YAML (or JSON) experiment config.

    Relative ``dataset`` and ``output`` paths resolve against the config's
    directory. A model entry may be a bare kind name, e.g. ``"mlp"``.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from None
    return config_from_dict(raw, path.parent)


# -- results ---------------------------------------------------------------

CSV_FIELDS = ("roi", "model", "metric", "accuracy", "n_pairs", "status", "reason")
DISPLAY_NAMES = {
    "linear": "LR",
    "ridge": "RR",
    "knn": "kNN",
    "kernel_ridge": "KR",
    "mlp": "MLP",
    "mlp_dropout": "MLP (drop.)",
}


def results_to_csv(t: ResultsTable) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in t.sorted():
        writer.writerow([r.roi, r.model, r.metric, format_float(r.accuracy), r.n_pairs,
                         r.status, r.reason])
    return buf.getvalue()


def read_results_csv(path) -> ResultsTable:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(CSV_FIELDS[:5]) <= set(reader.fieldnames):
            raise DecodingError(f"{path}: not a results CSV")
        records = [
            ResultRecord(row["roi"], row["model"], row["metric"], float(row["accuracy"]),
                         int(row["n_pairs"]), status=row.get("status") or "ok",
                         reason=row.get("reason") or "")
            for row in reader
        ]
    return ResultsTable(records)


def _ordered(values, canonical):
    known = [v for v in canonical if v in values]
    return known + sorted(v for v in values if v not in canonical)


def results_to_markdown(t: ResultsTable) -> str:
    """One grid per metric: models down, ROIs across, accuracies in percent."""
    rois = _ordered({r.roi for r in t}, ROI_ORDER)
    models = _ordered({r.model for r in t}, MODEL_KINDS)
    metrics = _ordered({r.metric for r in t}, ("pearson", "euclidean", "cosine"))
    cells = {r.key: r for r in t}
    header = "| Model | " + " | ".join(rois) + " |" if rois else "| Model |"
    rule = "|---|" + "---|" * len(rois)
    if not metrics:
        return f"{header}\n{rule}\n"
    blocks = []
    for metric in metrics:
        lines = [f"### {metric}", "", header, rule]
        for model in models:
            row = []
            for roi in rois:
                rec = cells.get((roi, model, metric))
                ok = rec is not None and rec.status == "ok" and math.isfinite(rec.accuracy)
                row.append(f"{100 * rec.accuracy:.2f}" if ok else "n/a")
            lines.append(f"| {DISPLAY_NAMES.get(model, model)} | " + " | ".join(row) + " |")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def render_results(t: ResultsTable, format="csv", path=None) -> str:
    if format == "csv":
        text = results_to_csv(t)
    elif format in ("md", "markdown"):
        text = results_to_markdown(t)
    else:
        raise ValueError(f"unknown results format {format!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_outputs(t: ResultsTable, directory) -> dict[str, Path]:
    """Write ``results.csv``, ``results.md`` and ``results.meta.json`` (timings live only in the last)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": directory / "results.csv",
        "md": directory / "results.md",
        "meta": directory / "results.meta.json",
    }
    render_results(t, "csv", paths["csv"])
    render_results(t, "md", paths["md"])
    meta = dict(t.metadata)
    meta["wall_time"] = {f"{r.roi}/{r.model}/{r.metric}": r.wall_time for r in t.sorted()}
    paths["meta"].write_text(json.dumps(meta, indent=2, default=str) + "\n", encoding="utf-8")
    return paths
