"""Content-addressed response cache keyed by the full request identity."""
from __future__ import annotations

import json
import os
import tempfile
import warnings
from pathlib import Path

from ..errors import BackendError
from ..seeding import json_digest
from .base import GenerationRequest, GenerationResponse

__all__ = ["ResponseCache", "cache_key", "serve_with_cache"]


def cache_key(
    model_name: str,
    prompt: str,
    temperature: float,
    max_tokens: int,
    sample_index: int,
) -> str:
    return json_digest(
        {
            "model": model_name,
            "prompt": prompt,
            "temperature": temperature,
            "max_tokens": max_tokens,
            "sample_index": sample_index,
        }
    )


class ResponseCache:
    """One JSON file per completion, written atomically.

    A corrupt entry is reported as a warning and treated as a miss, never as
    data; concurrent writers race benignly because the final rename is
    atomic and both sides write identical content-addressed payloads.
    """

    def __init__(self, cache_dir: str | Path) -> None:
        self.root = Path(cache_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            completion = payload["completion"]
            if not isinstance(completion, str):
                raise TypeError("completion must be a string")
            return completion
        except (OSError, ValueError, TypeError, KeyError) as exc:
            warnings.warn(f"discarding corrupt cache entry {path}: {exc}", stacklevel=2)
            return None

    def put(self, key: str, completion: str) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = json.dumps({"completion": completion}, ensure_ascii=False)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(payload)
            os.replace(tmp, path)
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def serve_with_cache(
    cache: ResponseCache | None,
    model_name: str,
    request: GenerationRequest,
    backend_id: str,
    produce,
) -> GenerationResponse:
    """Serve a request from cache when every draw is present, else produce.

    ``produce(n)`` must return exactly n completions; the fresh draws are
    written back individually so later requests hit without re-generating.
    """
    n = request.effective_n_samples
    keys = [
        cache_key(model_name, request.prompt, request.temperature, request.max_tokens, i)
        for i in range(n)
    ]
    if cache is not None:
        hits = [cache.get(k) for k in keys]
        if all(h is not None for h in hits):
            return GenerationResponse(tuple(hits), backend_id, cached=True)
    completions = list(produce(n))
    if len(completions) != n:
        raise BackendError(
            f"backend returned {len(completions)} completions, expected {n}"
        )
    if cache is not None:
        for key, completion in zip(keys, completions):
            cache.put(key, completion)
    return GenerationResponse(tuple(completions), backend_id, cached=False)
