"""Chat-completion HTTP backend with retries and response caching."""
from __future__ import annotations

import os

import httpx

from ..errors import BackendError, ConfigError
from .base import BackendConfig, GenerationRequest, GenerationResponse, TransientFault, retry_call
from .cache import ResponseCache, serve_with_cache

__all__ = ["HttpBackend"]

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class HttpBackend:
    """POSTs one user message per request to a chat-completion endpoint.

    Timeouts, connection drops, 429 and 5xx responses are retried with
    exponential backoff up to ``max_retries`` extra attempts; other 4xx
    responses fail immediately. The bearer token is read from the
    environment variable named in the config and sent only when present.
    """

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        if config.kind != "http":
            raise ValueError(f"HttpBackend requires kind='http', got {config.kind!r}")
        if not config.endpoint:
            raise ConfigError("http backend needs a non-empty endpoint")
        self.config = config
        self.backend_id = f"http/{config.model_name}"
        self._cache = ResponseCache(config.cache_dir) if config.cache_dir else None
        self._client = httpx.Client(timeout=config.request_timeout, transport=transport)

    @property
    def max_concurrency(self) -> int:
        return self.config.max_concurrency

    def close(self) -> None:
        self._client.close()

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        def produce(n: int) -> list[str]:
            return self._request_completions(request, n)

        return serve_with_cache(
            self._cache, self.config.model_name, request, self.backend_id, produce
        )

    def _request_completions(self, request: GenerationRequest, n: int) -> list[str]:
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "n": n,
        }
        body = retry_call(
            lambda: self._post_once(payload),
            max_retries=self.config.max_retries,
            backoff=self.config.retry_backoff,
            retryable=(TransientFault,),
        )
        return self._extract_completions(body, n)

    def _post_once(self, payload: dict) -> dict:
        headers = {}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            response = self._client.post(self.config.endpoint, json=payload, headers=headers)
        except httpx.TimeoutException as exc:
            raise TransientFault(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransientFault(f"transport failure: {exc}") from exc
        if response.status_code in _RETRYABLE_STATUS:
            raise TransientFault(f"status {response.status_code}")
        if response.status_code >= 400:
            raise BackendError(
                f"endpoint rejected the request with status {response.status_code}: "
                f"{response.text[:200]}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise BackendError(f"endpoint returned non-JSON body: {exc}") from exc

    def _extract_completions(self, body: dict, n: int) -> list[str]:
        try:
            choices = body["choices"]
            completions = [choice["message"]["content"] for choice in choices]
        except (KeyError, TypeError) as exc:
            raise BackendError(f"malformed completion payload: {exc}") from exc
        if len(completions) < n:
            raise BackendError(f"endpoint returned {len(completions)} choices, expected {n}")
        if not all(isinstance(c, str) for c in completions):
            raise BackendError("completion content must be text")
        return completions[:n]
