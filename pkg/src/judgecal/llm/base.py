"""Generation request/response contracts shared by every backend."""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, runtime_checkable

from ..errors import BackendError

__all__ = [
    "GenerationRequest",
    "GenerationResponse",
    "BackendConfig",
    "Backend",
    "TransientFault",
    "retry_call",
]

BACKEND_KINDS = ("http", "mock")


@dataclass(frozen=True)
class GenerationRequest:
    """One prompt plus its sampling parameters.

    Greedy decoding admits a single distinct draw, so temperature 0 forces
    the effective sample count to 1 regardless of ``n_samples``.
    """

    prompt: str
    temperature: float = 0.0
    max_tokens: int = 256
    n_samples: int = 1

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be positive, got {self.max_tokens}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be positive, got {self.n_samples}")

    @property
    def effective_n_samples(self) -> int:
        return 1 if self.temperature == 0 else self.n_samples


@dataclass(frozen=True)
class GenerationResponse:
    completions: tuple[str, ...]
    backend_id: str
    cached: bool = False

    def __post_init__(self) -> None:
        if not self.completions:
            raise ValueError("a response must carry at least one completion")


@dataclass(frozen=True)
class BackendConfig:
    """Construction parameters for a generation backend.

    ``seed`` only drives the mock; ``endpoint`` and the API credential (read
    from the environment variable named by ``api_key_env``) only drive HTTP.
    """

    kind: str
    endpoint: str = ""
    model_name: str = "mock"
    request_timeout: float = 60.0
    max_retries: int = 3
    max_concurrency: int = 4
    cache_dir: str | Path | None = None
    seed: int = 0
    api_key_env: str = "JUDGECAL_API_KEY"
    retry_backoff: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"kind must be one of {BACKEND_KINDS}, got {self.kind!r}")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.retry_backoff < 0:
            raise ValueError("retry_backoff must be >= 0")


@runtime_checkable
class Backend(Protocol):
    """Anything that can turn a prompt into completions."""

    backend_id: str

    @property
    def max_concurrency(self) -> int: ...

    def generate(self, request: GenerationRequest) -> GenerationResponse: ...


class TransientFault(Exception):
    """A failure worth retrying: timeout, connection drop, 429/5xx."""


def retry_call(
    fn: Callable[[], object],
    *,
    max_retries: int,
    backoff: float = 0.5,
    retryable: tuple[type[BaseException], ...] = (TransientFault,),
    sleep: Callable[[float], None] = time.sleep,
):
    """Invoke ``fn`` with exponential backoff on transient faults.

    The call is retried at most ``max_retries`` times, so a request that
    succeeds on any attempt returns exactly what a first-attempt success
    would have returned.
    """
    attempt = 0
    while True:
        try:
            return fn()
        except retryable as exc:
            if attempt >= max_retries:
                raise BackendError(
                    f"backend gave up after {attempt + 1} attempts: {exc}"
                ) from exc
            delay = backoff * (2**attempt)
            if delay > 0:
                sleep(delay)
            attempt += 1
