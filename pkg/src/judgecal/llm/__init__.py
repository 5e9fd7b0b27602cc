"""Generation backends: HTTP chat-completion and the deterministic mock."""
from .base import (
    Backend,
    BackendConfig,
    GenerationRequest,
    GenerationResponse,
    TransientFault,
    retry_call,
)
from .cache import ResponseCache, cache_key, serve_with_cache
from .http import HttpBackend
from .mock import (
    DEFAULT_QUALITY_KEYS,
    MockBackend,
    PlantedWorld,
    mock_score_function,
    planted_criteria_text,
)

__all__ = [
    "Backend",
    "BackendConfig",
    "GenerationRequest",
    "GenerationResponse",
    "TransientFault",
    "retry_call",
    "ResponseCache",
    "cache_key",
    "serve_with_cache",
    "HttpBackend",
    "MockBackend",
    "PlantedWorld",
    "DEFAULT_QUALITY_KEYS",
    "mock_score_function",
    "planted_criteria_text",
]
