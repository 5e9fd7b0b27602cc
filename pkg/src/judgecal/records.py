"""Per-sample evaluation records produced by scoring runs."""
from __future__ import annotations

from dataclasses import dataclass

__all__ = ["EvaluationRecord", "NO_CRITERIA_ID"]

# Marker used when samples are scored without any criteria in the prompt.
NO_CRITERIA_ID = "none"


@dataclass(frozen=True)
class EvaluationRecord:
    """One scored sample under one criteria.

    ``parsed_score`` is None when the completion yielded no usable score and
    the sample was excluded; ``raw_completion`` then preserves the offending
    text for disclosure. Scores parsed from completions sit on the aspect
    grid; externally supplied predictions may be arbitrary reals.
    """

    sample_id: str
    criteria_id: str
    aspect: str
    raw_completion: str
    parsed_score: float | None

    @property
    def excluded(self) -> bool:
        return self.parsed_score is None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "criteria_id": self.criteria_id,
            "aspect": self.aspect,
            "raw_completion": self.raw_completion,
            "parsed_score": self.parsed_score,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EvaluationRecord":
        return cls(
            sample_id=payload["sample_id"],
            criteria_id=payload["criteria_id"],
            aspect=payload["aspect"],
            raw_completion=payload["raw_completion"],
            parsed_score=payload["parsed_score"],
        )
