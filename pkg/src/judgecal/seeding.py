"""Deterministic seed derivation and content digests."""
from __future__ import annotations

import hashlib
import json
from typing import Any

__all__ = ["text_digest", "json_digest", "derive_seed"]


def text_digest(text: str) -> str:
    """Hex digest of a text blob; the first 16 chars identify criteria and prompts."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def json_digest(obj: Any) -> str:
    """Digest of a JSON-serializable object under a canonical encoding."""
    canonical = json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return text_digest(canonical)


def derive_seed(master: int, *parts: Any) -> int:
    """Derive a child seed from a master seed and a path of labels.

    The derivation is a pure function of its arguments, so any stage can
    recompute the seed it was given without shared mutable state.
    """
    payload = json.dumps([master, *[str(p) for p in parts]], separators=(",", ":"))
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
