"""Shared builders for golden sets and planted mock worlds."""
from __future__ import annotations

import pytest

from judgecal import Aspect, GoldenLabel, GoldenSet, Sample


@pytest.fixture
def aspect() -> Aspect:
    return Aspect(name="coherence", scale_min=1, scale_max=5, scale_step=1.0)


def build_golden(
    scores,
    aspect_name: str = "coherence",
    name: str = "golden",
    n_sources: int | None = None,
) -> GoldenSet:
    """A golden set with one sample per score, cycling over sources.

    Targets are made textually distinct and source texts consistent within
    each source group, so the set passes ingestion-grade validation.
    """
    n_sources = n_sources or len(scores)
    samples = []
    labels = []
    for i, score in enumerate(scores):
        doc = i % n_sources
        sid = f"s{i:03d}"
        samples.append(
            Sample(
                id=sid,
                source=f"source document {doc} discussing subject {doc}",
                target=f"candidate text {i} derived from subject {doc}",
                system_id=f"sys{i // n_sources}",
                source_id=f"doc{doc}",
            )
        )
        labels.append(
            GoldenLabel(sample_id=sid, aspect=aspect_name, score=float(score))
        )
    return GoldenSet(samples=tuple(samples), labels=tuple(labels), name=name)


def build_grid_golden(
    grid: dict[str, dict[str, float]],
    aspect_name: str = "coherence",
    name: str = "grid",
) -> GoldenSet:
    """A golden set from an explicit source -> system -> score grid."""
    samples = []
    labels = []
    for source_id, by_system in grid.items():
        for system_id, score in by_system.items():
            sid = f"{source_id}-{system_id}"
            samples.append(
                Sample(
                    id=sid,
                    source=f"shared source text for {source_id}",
                    target=f"output of {system_id} on {source_id}",
                    system_id=system_id,
                    source_id=source_id,
                )
            )
            labels.append(
                GoldenLabel(sample_id=sid, aspect=aspect_name, score=float(score))
            )
    return GoldenSet(samples=tuple(samples), labels=tuple(labels), name=name)
