"""Versioned JSON persistence shared by both model families, plus
table-to-matrix conversion against a model's feature list."""

from __future__ import annotations

import json

import numpy as np

from .dataset import FeatureTable

GBDT_FORMAT = "fuzzdistill-gbdt"
MLP_FORMAT = "fuzzdistill-mlp"


class CorruptModelError(Exception):
    pass


class VersionMismatchError(Exception):
    pass


class MissingFeatureError(Exception):
    pass


def dump_payload(format_name: str, version: int, payload: dict) -> bytes:
    document = {"format": format_name, "version": version, **payload}
    return json.dumps(document, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def load_payload(data: bytes, format_name: str, version: int) -> dict:
    try:
        document = json.loads(data.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"unreadable model payload: {exc}") from exc
    if not isinstance(document, dict) or "format" not in document:
        raise CorruptModelError("model payload missing format field")
    if document["format"] != format_name:
        raise CorruptModelError(
            f"expected format {format_name}, got {document['format']!r}"
        )
    if document.get("version") != version:
        raise VersionMismatchError(
            f"expected {format_name} version {version}, got {document.get('version')!r}"
        )
    return document


def to_matrix(table: FeatureTable, feature_names: list[str]) -> np.ndarray:
    """Select the model's feature columns (in model order) as float64."""
    missing = [name for name in feature_names if name not in table.header]
    if missing:
        raise MissingFeatureError(f"table lacks feature column(s) {missing}")
    columns = [table.column_index(name) for name in feature_names]
    out = np.empty((len(table.rows), len(columns)), dtype=np.float64)
    for i, row in enumerate(table.rows):
        for j, col in enumerate(columns):
            out[i, j] = float(row[col])
    return out
