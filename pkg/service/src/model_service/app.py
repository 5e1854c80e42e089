"""FastAPI application exposing the /v1 scorer protocol."""
from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backend import LocaleBackend, ServiceError
from .config import ServiceConfig


class MaskScoresRequest(BaseModel):
    text: str
    mask_index: int = Field(ge=0)
    top_k: int = Field(ge=1)
    locale: str


class HumorRequest(BaseModel):
    masked_text: str
    filled_text: str
    locale: str


class EmbedRequest(BaseModel):
    text: str
    locale: str
    layer: Literal["second_to_last", "sum_last_4"] | None = None


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="madlib-model-service", docs_url=None, redoc_url=None)
    backends = {
        locale: LocaleBackend(models.mlm_dir, models.humor_dir)
        for locale, models in config.locales.items()
    }

    def backend_for(locale: str) -> LocaleBackend:
        backend = backends.get(locale)
        if backend is None:
            raise ServiceError(503, f"no model loaded for locale {locale!r}")
        return backend

    @app.exception_handler(ServiceError)
    async def service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:1])})

    @app.post("/v1/mask_scores")
    def mask_scores(body: MaskScoresRequest):
        candidates = backend_for(body.locale).mask_scores(body.text, body.mask_index, body.top_k)
        return {"candidates": candidates}

    @app.post("/v1/humor")
    def humor(body: HumorRequest):
        return {"p_funny": backend_for(body.locale).humor(body.masked_text, body.filled_text)}

    @app.post("/v1/embed")
    def embed(body: EmbedRequest):
        tokens, vectors = backend_for(body.locale).embed(
            body.text, body.layer or config.layer, config.max_words
        )
        return {"tokens": tokens, "vectors": vectors}

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "locales": sorted(backends), "layer": config.layer}

    return app
