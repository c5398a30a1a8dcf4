"""Versioned on-disk model format.

Models serialize to a self-describing JSON document (structured text, UTF-8).
Floats round-trip exactly through Python's shortest-repr JSON encoding, so a
loaded model predicts bit-identically to the one saved. The layout is
documented field-by-field in the README so other implementations can read it.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .binning import FeatureSchema, KIND_CONTINUOUS
from .ebm import EbmModel, TermFunction
from .errors import ModelFormatError

FORMAT_NAME = "amlboost-ebm"
FORMAT_VERSION = 1


def model_to_dict(model: EbmModel) -> dict:
    schemas = []
    for s in model.schemas:
        entry = {"name": s.name, "kind": s.kind}
        if s.kind == KIND_CONTINUOUS:
            entry["bin_edges"] = list(s.bin_edges)
        else:
            entry["categories"] = list(s.categories)
        schemas.append(entry)
    return {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "intercept": model.intercept,
        "schema": schemas,
        "terms": [
            {"feature": t.feature, "scores": [float(v) for v in t.scores]}
            for t in model.terms
        ],
        "bin_counts": [[float(v) for v in c] for c in model.bin_counts],
        "importances": [float(v) for v in model.importances],
        "meta": model.meta,
    }


def model_from_dict(doc: dict) -> EbmModel:
    try:
        if doc.get("format") != FORMAT_NAME:
            raise ModelFormatError(
                f"not an {FORMAT_NAME} file (format tag {doc.get('format')!r})"
            )
        if doc.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(
                f"unsupported format version {doc.get('format_version')!r}; "
                f"this build reads version {FORMAT_VERSION}"
            )
        schemas = []
        for entry in doc["schema"]:
            schemas.append(FeatureSchema(
                name=entry["name"],
                kind=entry["kind"],
                bin_edges=tuple(entry.get("bin_edges", ())),
                categories=tuple(entry.get("categories", ())),
            ))
        terms = [
            TermFunction(feature=t["feature"], scores=np.asarray(t["scores"], dtype=float))
            for t in doc["terms"]
        ]
        model = EbmModel(
            schemas=schemas,
            terms=terms,
            intercept=float(doc["intercept"]),
            importances=np.asarray(doc["importances"], dtype=float),
            bin_counts=[np.asarray(c, dtype=float) for c in doc["bin_counts"]],
            meta=doc.get("meta", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model document is malformed: {exc}") from exc
    if len(model.terms) != len(model.schemas):
        raise ModelFormatError("model document is malformed: term/schema count mismatch")
    for schema, term in zip(model.schemas, model.terms):
        if schema.name != term.feature or term.scores.size != schema.n_bins:
            raise ModelFormatError(
                f"model document is malformed: term {term.feature!r} does not match its schema"
            )
    return model


def save_model(model: EbmModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")
    return path


def load_model(path: str | Path) -> EbmModel:
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"model file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path} is corrupted: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path} is corrupted: top-level value is not an object")
    return model_from_dict(doc)


def model_version_hash(path: str | Path) -> str:
    """Stable identity for a model file, reported by the HTTP service."""
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return digest[:16]
