"""Flat-file persistence: atomic writes, the returns file, and the run manifest."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from datetime import date
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import DataError, MdnVarError
from ..series import ReturnSeries

MANIFEST = "manifest.json"
MANIFEST_FORMAT = "mdnvar-manifest"


class ArtifactMissingError(MdnVarError):
    """A file the current step depends on does not exist."""

    exit_code = 2


def write_atomic(path: str | Path, text: str) -> Path:
    """Write ``text`` to a sibling temp file, then rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path: str | Path, doc) -> Path:
    return write_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_text(path: str | Path, what: str) -> str:
    path = Path(path)
    if not path.is_file():
        raise ArtifactMissingError(f"{what} not found: {path}")
    return path.read_text(encoding="utf-8")


def read_json(path: str | Path, what: str):
    text = read_text(path, what)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{what} at {path} is not valid JSON: {exc}") from None


# -- returns file -------------------------------------------------------------


def returns_to_csv(series: ReturnSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "return", "loss"])
    for d, r, l in zip(series.dates, series.returns, series.losses):
        w.writerow([d.isoformat(), repr(float(r)), repr(float(l))])
    return buf.getvalue()


def returns_from_csv(text: str) -> ReturnSeries:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["date", "return", "loss"]:
        raise DataError("returns file must have header date,return,loss")
    try:
        dates = tuple(date.fromisoformat(r[0]) for r in rows[1:])
        values = np.array([float(r[1]) for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise DataError(f"malformed returns file: {exc}") from None
    return ReturnSeries(dates, values)


# -- manifest -----------------------------------------------------------------


def new_manifest(config) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "engine_version": __version__,
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "artifacts": {"models": {}},
        "timings": {},
    }


def load_manifest(out_dir: Path, config=None) -> dict:
    """The manifest in ``out_dir``; a fresh one if absent or built from another config."""
    path = Path(out_dir) / MANIFEST
    if not path.is_file():
        if config is None:
            raise ArtifactMissingError(f"manifest not found: {path}")
        return new_manifest(config)
    doc = read_json(path, "manifest")
    validate_manifest_shape(doc)
    if config is not None and doc["config_hash"] != config.config_hash():
        return new_manifest(config)
    return doc


def validate_manifest_shape(doc) -> None:
    if not isinstance(doc, dict) or doc.get("format") != MANIFEST_FORMAT:
        raise DataError("manifest has an unrecognized format")
    for key, kind in (("config_hash", str), ("engine_version", str), ("config", dict),
                      ("artifacts", dict), ("timings", dict)):
        if not isinstance(doc.get(key), kind):
            raise DataError(f"manifest field {key!r} is missing or malformed")
    if not isinstance(doc["artifacts"].get("models", {}), dict):
        raise DataError("manifest field 'artifacts.models' is malformed")


def save_manifest(out_dir: Path, doc: dict) -> Path:
    return write_json(Path(out_dir) / MANIFEST, doc)


def record_model_artifact(doc: dict, model: str, kind: str, rel_path: str) -> None:
    doc["artifacts"].setdefault("models", {}).setdefault(model, {})[kind] = rel_path
