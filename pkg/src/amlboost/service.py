"""Read-only HTTP decision service.

Models load once at startup (or on an explicit registry reload, which swaps
the whole registry atomically); no endpoint mutates them. Every response
carries the model id and the model file's version hash so results are
reproducible from (hash, request body).
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .binning import KIND_CONTINUOUS
from .config import ServiceConfig
from .ebm import EbmModel
from .errors import AmlboostError, UnknownFeatureError
from .explain import LocalExplanation, explain_global, explain_local, term_curve
from .recommend import recommend
from .store import load_model, model_version_hash

log = logging.getLogger(__name__)

TOP_K = 15


@dataclass(frozen=True)
class LoadedModel:
    model_id: str
    model: EbmModel
    version: str


class ModelRegistry:
    """Immutable mapping of model id -> loaded model; reload swaps it whole."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._lock = threading.Lock()
        self._models: dict[str, LoadedModel] = {}
        self.reload()

    def reload(self):
        loaded = {}
        for model_id, path in self.config.models.items():
            loaded[model_id] = LoadedModel(
                model_id=model_id,
                model=load_model(path),
                version=model_version_hash(path),
            )
        with self._lock:
            self._models = loaded
        log.info("registry loaded: %s", sorted(loaded))

    def snapshot(self) -> dict[str, LoadedModel]:
        with self._lock:
            return self._models

    def get(self, model_id: str) -> LoadedModel | None:
        return self.snapshot().get(model_id)


class PatientPayload(BaseModel):
    features: dict[str, object]


def _error(status: int, detail):
    return JSONResponse(status_code=status, content={"detail": detail})


def _validate_features(entry: LoadedModel, payload: dict):
    """Field-level checks; returns (record, warnings, errors)."""
    errors = []
    warnings = []
    schema_by_name = {s.name: s for s in entry.model.schemas}
    record = {}
    for name, value in payload.items():
        schema = schema_by_name.get(name)
        if schema is None:
            errors.append({"loc": ["body", "features", name],
                           "msg": "unknown feature for this model",
                           "type": "value_error.unknown_feature"})
            continue
        if value is None:
            continue  # explicit missing
        if schema.kind == KIND_CONTINUOUS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                errors.append({"loc": ["body", "features", name],
                               "msg": "expected a number",
                               "type": "type_error.number"})
                continue
            if not math.isfinite(float(value)):
                errors.append({"loc": ["body", "features", name],
                               "msg": "value must be finite",
                               "type": "value_error.non_finite"})
                continue
            record[name] = float(value)
        else:
            if not isinstance(value, (str, int, float)) or isinstance(value, bool):
                errors.append({"loc": ["body", "features", name],
                               "msg": "expected a category value",
                               "type": "type_error.category"})
                continue
            record[name] = value
    for name in schema_by_name:
        if name not in record:
            warnings.append(f"feature {name!r} missing; routed to the missing bin")
    return record, warnings, errors


def _explanation_payload(explanation: LocalExplanation) -> dict:
    def contribution(c):
        return {
            "feature": c.feature,
            "value": c.value,
            "bin": c.bin_label,
            "contribution": c.score,
            "term_index": c.term_index,
        }

    return {
        "intercept": explanation.intercept,
        "logit": explanation.logit,
        "probability": explanation.probability,
        "predicted_class": explanation.predicted_class,
        "contributions": [contribution(c) for c in explanation.contributions],
        "top": [contribution(c) for c in explanation.top(TOP_K)],
    }


def create_app(config: ServiceConfig, registry: ModelRegistry | None = None) -> FastAPI:
    registry = registry or ModelRegistry(config)
    app = FastAPI(title="amlboost decision service", docs_url=None, redoc_url=None)
    app.state.registry = registry

    @app.middleware("http")
    async def limit_body(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and int(length) > config.max_body_bytes:
            return _error(413, f"request body exceeds {config.max_body_bytes} bytes")
        return await call_next(request)

    @app.exception_handler(AmlboostError)
    async def on_domain_error(_, exc: AmlboostError):
        return _error(422, str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok", "models": sorted(registry.snapshot())}

    @app.get("/models")
    def models():
        out = []
        for model_id, entry in sorted(registry.snapshot().items()):
            out.append({
                "id": model_id,
                "version": entry.version,
                "features": entry.model.feature_names,
                "positive_class": entry.model.meta.get("positive_class"),
                "trained_rows": entry.model.meta.get("trained_rows"),
                "default": model_id == config.default_model,
            })
        return {"models": out, "default": config.default_model}

    def _lookup(model_id: str) -> LoadedModel | None:
        return registry.get(model_id)

    @app.get("/models/{model_id}/importance")
    def importance(model_id: str):
        entry = _lookup(model_id)
        if entry is None:
            return _error(404, f"unknown model {model_id!r}")
        gi = explain_global(entry.model)
        return {
            "model_id": model_id,
            "version": entry.version,
            "importances": [
                {"feature": name, "importance": gi.importances[name], "rank": i + 1}
                for i, name in enumerate(gi.ranking)
            ],
        }

    @app.get("/models/{model_id}/term/{feature}")
    def term(model_id: str, feature: str):
        entry = _lookup(model_id)
        if entry is None:
            return _error(404, f"unknown model {model_id!r}")
        try:
            points = term_curve(entry.model, feature)
        except UnknownFeatureError:
            return _error(404, f"model {model_id!r} has no feature {feature!r}")
        schema = next(s for s in entry.model.schemas if s.name == feature)
        return {
            "model_id": model_id,
            "version": entry.version,
            "feature": feature,
            "kind": schema.kind,
            "points": [{"bin": label, "score": score} for label, score in points],
        }

    @app.post("/models/{model_id}/predict")
    def predict(model_id: str, payload: PatientPayload):
        entry = _lookup(model_id)
        if entry is None:
            return _error(404, f"unknown model {model_id!r}")
        record, warnings, errors = _validate_features(entry, payload.features)
        if errors:
            return _error(422, errors)
        explanation = explain_local(entry.model, record)
        return {
            "model_id": model_id,
            "version": entry.version,
            "probability": explanation.probability,
            "logit": explanation.logit,
            "predicted_class": explanation.predicted_class,
            "explanation": _explanation_payload(explanation),
            "warnings": warnings,
        }

    @app.post("/models/{model_id}/recommend")
    def recommend_endpoint(model_id: str, payload: PatientPayload):
        entry = _lookup(model_id)
        if entry is None:
            return _error(404, f"unknown model {model_id!r}")
        record, warnings, errors = _validate_features(entry, payload.features)
        if errors:
            return _error(422, errors)
        # the incoming treatment value is overwritten by design; not a gap
        warnings = [w for w in warnings if "'treatment_intensity'" not in w]
        result = recommend(entry.model, record)
        return {
            "model_id": model_id,
            "version": entry.version,
            "recommended": result.recommended,
            "margin": result.margin,
            "options": [
                {
                    "treatment": option.treatment,
                    "probability": option.probability,
                    "explanation": _explanation_payload(option.explanation),
                }
                for option in result.options
            ],
            "warnings": warnings,
        }

    return app
