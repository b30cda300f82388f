"""JSON-over-HTTP inference service: /score, /embed, /healthz.

Responses are index-aligned with their requests. Scores are clamped to
[0, 1]; embedding vectors are unit-norm. Error codes: 400 malformed body,
404 unknown model, 413 oversized batch, 500 inference failure.
"""

from __future__ import annotations

import logging
import os
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .models import ModelNotKnown, ModelRegistry

logger = logging.getLogger(__name__)

MAX_BATCH = 64
DEFAULT_PORT = 8008


class ScorePair(BaseModel):
    premise: str
    hypothesis: str


class ScoreRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: str
    pairs: list[ScorePair]


class EmbedRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: str
    texts: list[str]


def create_app(registry: Optional[ModelRegistry] = None) -> FastAPI:
    app = FastAPI(title="t2s-sidecar")
    app.state.registry = registry or ModelRegistry()

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    @app.exception_handler(ModelNotKnown)
    async def unknown_model(request: Request, exc: ModelNotKnown):
        return JSONResponse(status_code=404,
                            content={"error": "unknown model", "model": str(exc.args[0])})

    @app.exception_handler(Exception)
    async def inference_failure(request: Request, exc: Exception):
        logger.exception("inference failure")
        return JSONResponse(status_code=500, content={"error": "inference failure"})

    def batch_error(items, what) -> Optional[JSONResponse]:
        if not items:
            return JSONResponse(status_code=400, content={"error": f"{what} must be non-empty"})
        if len(items) > MAX_BATCH:
            return JSONResponse(status_code=413,
                                content={"error": f"batch of {len(items)} exceeds {MAX_BATCH} {what}"})
        return None

    @app.post("/score")
    async def score(request: ScoreRequest):
        error = batch_error(request.pairs, "pairs")
        if error is not None:
            return error
        if any(not p.premise or not p.hypothesis for p in request.pairs):
            return JSONResponse(status_code=400,
                                content={"error": "premise and hypothesis must be non-empty"})
        backend = app.state.registry.score_backend(request.model)
        scores = backend.score([(p.premise, p.hypothesis) for p in request.pairs])
        return {"scores": [min(max(float(s), 0.0), 1.0) for s in scores]}

    @app.post("/embed")
    async def embed(request: EmbedRequest):
        error = batch_error(request.texts, "texts")
        if error is not None:
            return error
        if any(not text for text in request.texts):
            return JSONResponse(status_code=400, content={"error": "texts must be non-empty"})
        backend = app.state.registry.embed_backend(request.model)
        vectors = np.asarray(backend.embed(request.texts), dtype=np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if np.any(norms == 0):
            return JSONResponse(status_code=500, content={"error": "zero-norm embedding"})
        vectors = vectors / norms
        return {"dim": int(vectors.shape[1]), "vectors": vectors.tolist()}

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "loaded_models": app.state.registry.loaded_models}

    return app


def main() -> None:
    import uvicorn

    logging.basicConfig(level=logging.INFO)
    port = int(os.environ.get("PORT", DEFAULT_PORT))
    uvicorn.run(create_app(), host="0.0.0.0", port=port)


if __name__ == "__main__":
    main()
