"""HTTP prediction service: multipart feature-file uploads scored by the
trained models, with confidence filtering and a content-hash cache.

Cache entries never expire on their own; the two admin endpoints clear one
file's records or the whole cache.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import dnn, gbdt
from .dataset import BLOCK_KIND, FUNCTION_KIND, TableError, read_table
from .modelio import MissingFeatureError

DEFAULT_HIGH_THRESHOLD = 0.90
DEFAULT_SURE_THRESHOLD = 1.0 - 1e-6
MAX_UPLOAD_BYTES = 64 * 1024 * 1024

_HASH_RE = re.compile(r"^[0-9a-f]{64}$")

MODEL_KINDS = {
    "dnnfn": ("mlp", FUNCTION_KIND),
    "dnnbb": ("mlp", BLOCK_KIND),
    "gbdtfn": ("gbdt", FUNCTION_KIND),
    "gbdtbb": ("gbdt", BLOCK_KIND),
}


def file_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class LoadedModel:
    model_id: str
    table_kind: str
    predictor: object
    family: str

    def predict(self, table) -> list[float]:
        if self.family == "mlp":
            return dnn.predict_proba(self.predictor, table)
        return gbdt.predict_proba(self.predictor, table)


def load_model_file(model_id: str, path: str | Path) -> LoadedModel:
    family, table_kind = MODEL_KINDS[model_id]
    data = Path(path).read_bytes()
    predictor = dnn.load_model(data) if family == "mlp" else gbdt.load_model(data)
    return LoadedModel(model_id, table_kind, predictor, family)


@dataclass
class ServiceConfig:
    model_paths: dict[str, str] = field(default_factory=dict)
    high_threshold: float = DEFAULT_HIGH_THRESHOLD
    sure_threshold: float = DEFAULT_SURE_THRESHOLD
    max_upload_bytes: int = MAX_UPLOAD_BYTES
    ui_dir: str | None = None


class PredictionCache:
    """In-memory cache keyed by (file sha256, model id). Never expires."""

    def __init__(self):
        self._entries: dict[tuple[str, str], dict] = {}
        self._lock = threading.Lock()

    def get(self, key: tuple[str, str]) -> dict | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: tuple[str, str], value: dict) -> None:
        with self._lock:
            self._entries[key] = value

    def clear_hash(self, file_sha256: str) -> int:
        with self._lock:
            doomed = [k for k in self._entries if k[0] == file_sha256]
            for key in doomed:
                del self._entries[key]
            return len(doomed)

    def clear_all(self) -> int:
        with self._lock:
            count = len(self._entries)
            self._entries.clear()
            return count

    def size(self) -> int:
        with self._lock:
            return len(self._entries)


def _bucket(probability: float, high: float, sure: float) -> str:
    if probability >= sure:
        return "sure"
    if probability >= high:
        return "high"
    if probability >= 0.7:
        return "medium"
    if probability >= 0.5:
        return "low"
    return "safe"


def _summarize(records: list[dict], high: float, sure: float) -> dict:
    buckets = {"safe": 0, "low": 0, "medium": 0, "high": 0, "sure": 0}
    vulnerable = 0
    for record in records:
        buckets[_bucket(record["probability"], high, sure)] += 1
        vulnerable += record["predicted"]
    return {
        "total": len(records),
        "vulnerable": vulnerable,
        "safe": len(records) - vulnerable,
        "buckets": buckets,
    }


def create_app(
    models: dict[str, LoadedModel], config: ServiceConfig | None = None
) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="fuzzdistill prediction service")
    cache = PredictionCache()
    app.state.cache = cache
    app.state.models = models

    def error(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"detail": message})

    async def run_prediction(endpoint: str, file: UploadFile | None, modelselect: str | None):
        if file is None or modelselect is None:
            return error(400, "multipart fields 'file' and 'modelselect' are required")
        if modelselect not in models:
            known = ", ".join(sorted(models)) or "none configured"
            return error(400, f"unknown model {modelselect!r}; available: {known}")
        content = await file.read()
        if len(content) > config.max_upload_bytes:
            return error(413, f"upload exceeds {config.max_upload_bytes} bytes")
        model = models[modelselect]
        sha = file_hash(content)
        key = (sha, modelselect)

        cached = cache.get(key)
        cache_hit = cached is not None
        if cached is None:
            try:
                text = content.decode("utf-8")
            except UnicodeDecodeError as exc:
                return error(422, f"upload is not UTF-8 text: {exc}")
            try:
                table = read_table(text, model.table_kind, allow_missing_label=True)
                probabilities = model.predict(table)
            except (TableError, MissingFeatureError) as exc:
                return error(422, str(exc))
            name_column = "FunctionName" if model.table_kind == FUNCTION_KIND else "BlockName"
            names = table.column(name_column)
            records = [
                {
                    "name": str(name),
                    "probability": float(p),
                    "predicted": 1 if p >= 0.5 else 0,
                }
                for name, p in zip(names, probabilities)
            ]
            cached = {
                "file_sha256": sha,
                "model": modelselect,
                "stats": _summarize(records, config.high_threshold, config.sure_threshold),
                "records": records,
            }
            cache.put(key, cached)

        if endpoint == "all":
            minimum = 0.5
        elif endpoint == "high":
            minimum = config.high_threshold
        else:
            minimum = config.sure_threshold
        body = {
            "file_sha256": cached["file_sha256"],
            "model": cached["model"],
            "cache_hit": cache_hit,
            "stats": cached["stats"],
            "records": [r for r in cached["records"] if r["probability"] >= minimum],
        }
        return JSONResponse(status_code=200, content=body)

    @app.post("/api/all-list")
    async def all_list(file: UploadFile | None = File(None), modelselect: str | None = Form(None)):
        return await run_prediction("all", file, modelselect)

    @app.post("/api/high-conf-list")
    async def high_conf_list(file: UploadFile | None = File(None), modelselect: str | None = Form(None)):
        return await run_prediction("high", file, modelselect)

    @app.post("/api/sure-list")
    async def sure_list(file: UploadFile | None = File(None), modelselect: str | None = Form(None)):
        return await run_prediction("sure", file, modelselect)

    @app.get("/api/clear-cache-record")
    async def clear_cache_record(hash: str | None = None):
        if hash is None or not _HASH_RE.fullmatch(hash):
            return error(400, "query parameter 'hash' must be 64 lowercase hex chars")
        removed = cache.clear_hash(hash)
        if removed == 0:
            return error(404, f"no cache entries for {hash}")
        return {"removed": removed, "hash": hash}

    @app.post("/api/clear-cache")
    @app.get("/api/clear-cache")
    async def clear_cache():
        return {"evicted": cache.clear_all()}

    @app.get("/api/health")
    async def health():
        return {
            "status": "ok",
            "models": sorted(models),
            "cache_entries": cache.size(),
        }

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app


def build_service(config: ServiceConfig) -> FastAPI:
    models = {
        model_id: load_model_file(model_id, path)
        for model_id, path in config.model_paths.items()
        if model_id in MODEL_KINDS
    }
    return create_app(models, config)
