"""HTTP client for the model service, validating every response against the
committed protocol schemas and the scorer invariants before anything is
returned to the pipeline.  Violations raise; nothing is silently repaired.
"""
from __future__ import annotations

import json
from importlib import resources

import httpx
import jsonschema
import numpy as np

from .scoring import Locale, MaskScore, ScorerBundle, ScorerError


class RemoteError(ScorerError):
    """Base class for remote-scorer failures."""


class TransportError(RemoteError):
    """Connection failure or non-2xx status."""


class ResponseSchemaError(RemoteError):
    """Response body is not valid JSON or fails the protocol schema."""


class ResponseInvariantError(RemoteError):
    """Schema-valid body that violates a scorer invariant."""


def load_schema(name: str) -> dict:
    text = resources.files("funlib.schemas").joinpath(f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


class RemoteScorer(ScorerBundle):
    """Scorer bundle backed by the ``/v1`` protocol of a model service."""

    def __init__(
        self,
        endpoint: str,
        locale: Locale = Locale.NEUTRAL,
        timeout: float = 30.0,
        layer: str | None = None,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.locale = locale
        self.layer = layer
        self._client = httpx.Client(base_url=endpoint, timeout=timeout, transport=transport)
        self._schemas = {
            name: load_schema(name)
            for name in ("mask_scores_response", "humor_response", "embed_response", "health_response")
        }

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict, schema: str) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(f"POST {path}: {exc}") from None
        if response.status_code != 200:
            raise TransportError(f"POST {path}: status {response.status_code}: {response.text}")
        try:
            body = response.json()
        except ValueError:
            raise ResponseSchemaError(f"POST {path}: response is not JSON") from None
        try:
            jsonschema.validate(body, self._schemas[schema])
        except jsonschema.ValidationError as exc:
            raise ResponseSchemaError(f"POST {path}: {exc.message}") from None
        return body

    def mask_distribution(self, text: str, mask_index: int, top_k: int) -> list[MaskScore]:
        if top_k < 1:
            raise ScorerError(f"top_k must be >= 1, got {top_k}")
        body = self._post(
            "/v1/mask_scores",
            {"text": text, "mask_index": mask_index, "top_k": top_k, "locale": self.locale.value},
            "mask_scores_response",
        )
        candidates = body["candidates"]
        if len(candidates) > top_k:
            raise ResponseInvariantError(f"{len(candidates)} candidates exceed top_k={top_k}")
        words = [c["word"] for c in candidates]
        if len(set(words)) != len(words):
            raise ResponseInvariantError("duplicate candidate words")
        probs = [c["log_prob"] for c in candidates]
        if any(b > a for a, b in zip(probs, probs[1:])):
            raise ResponseInvariantError("candidates not sorted by descending log_prob")
        return [MaskScore(word=c["word"], log_probability=c["log_prob"]) for c in candidates]

    def humor_probability(self, masked_text: str, filled_text: str) -> float:
        body = self._post(
            "/v1/humor",
            {"masked_text": masked_text, "filled_text": filled_text, "locale": self.locale.value},
            "humor_response",
        )
        return float(body["p_funny"])

    def token_embeddings(self, sentence: str) -> np.ndarray:
        payload = {"text": sentence, "locale": self.locale.value}
        if self.layer is not None:
            payload["layer"] = self.layer
        body = self._post("/v1/embed", payload, "embed_response")
        tokens, vectors = body["tokens"], body["vectors"]
        if len(tokens) != len(vectors):
            raise ResponseInvariantError(
                f"{len(tokens)} tokens but {len(vectors)} vectors"
            )
        dims = {len(v) for v in vectors}
        if len(dims) != 1:
            raise ResponseInvariantError(f"inconsistent embedding dimensions {sorted(dims)}")
        arr = np.asarray(vectors, dtype=float)
        if not np.isfinite(arr).all():
            raise ResponseInvariantError("non-finite embedding values")
        return arr

    def health(self) -> dict:
        try:
            response = self._client.get("/v1/health")
        except httpx.HTTPError as exc:
            raise TransportError(f"GET /v1/health: {exc}") from None
        if response.status_code != 200:
            raise TransportError(f"GET /v1/health: status {response.status_code}")
        try:
            body = response.json()
            jsonschema.validate(body, self._schemas["health_response"])
        except ValueError:
            raise ResponseSchemaError("GET /v1/health: response is not JSON") from None
        except jsonschema.ValidationError as exc:
            raise ResponseSchemaError(f"GET /v1/health: {exc.message}") from None
        return body


def remote_scorer(
    endpoint: str,
    locale: Locale = Locale.NEUTRAL,
    timeout: float = 30.0,
    layer: str | None = None,
    transport: httpx.BaseTransport | None = None,
) -> RemoteScorer:
    return RemoteScorer(endpoint, locale=locale, timeout=timeout, layer=layer, transport=transport)
