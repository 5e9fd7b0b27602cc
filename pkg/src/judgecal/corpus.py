"""Golden-set ingestion: expert-labeled samples grouped by source."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .seeding import json_digest

__all__ = [
    "Sample",
    "Aspect",
    "GoldenLabel",
    "GoldenSet",
    "ingest_golden_set",
    "load_aspect",
    "load_aspect_manifest",
    "partition_by_source",
    "write_golden_set",
]

RECORD_FIELDS = ("id", "source_id", "system_id", "source", "target", "score")


@dataclass(frozen=True)
class Sample:
    """One system output paired with the input it was generated from."""

    id: str
    source: str
    target: str
    system_id: str
    source_id: str

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("sample id must be non-empty")
        if not self.target:
            raise DataError(f"sample {self.id!r}: target text must be non-empty")


@dataclass(frozen=True)
class Aspect:
    """A scored quality dimension with its numeric scale.

    The grid of legal scores is ``scale_min + k * scale_step`` up to
    ``scale_max``. Human labels may fall anywhere inside the bounds; only
    machine-parsed scores are snapped to the grid.
    """

    name: str
    scale_min: float
    scale_max: float
    scale_step: float = 1.0

    def __post_init__(self) -> None:
        if not self.name:
            raise DataError("aspect name must be non-empty")
        if not self.scale_min < self.scale_max:
            raise DataError(f"aspect {self.name!r}: scale_min must be below scale_max")
        if self.scale_step <= 0:
            raise DataError(f"aspect {self.name!r}: scale_step must be positive")

    def grid_values(self) -> tuple[float, ...]:
        values = []
        k = 0
        while True:
            v = self.scale_min + k * self.scale_step
            if v > self.scale_max + 1e-9:
                break
            values.append(round(v, 10))
            k += 1
        return tuple(values)

    def contains(self, score: float) -> bool:
        return self.scale_min <= score <= self.scale_max

    def snap(self, value: float) -> float:
        """Nearest grid value, clamped to the scale bounds.

        Values exactly halfway between grid points round toward the top of
        the scale.
        """
        steps = math.floor((value - self.scale_min) / self.scale_step + 0.5)
        top = int((self.scale_max - self.scale_min) / self.scale_step + 1e-9)
        steps = min(max(steps, 0), top)
        return round(self.scale_min + steps * self.scale_step, 10)


@dataclass(frozen=True)
class GoldenLabel:
    """A human expert score for one sample under one aspect."""

    sample_id: str
    aspect: str
    score: float


@dataclass(frozen=True)
class GoldenSet:
    """An immutable collection of samples and their expert labels."""

    samples: tuple[Sample, ...]
    labels: tuple[GoldenLabel, ...]
    name: str = "golden"
    _by_id: dict = field(default_factory=dict, repr=False, compare=False)
    _label_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, Sample] = {}
        source_text: dict[str, str] = {}
        for sample in self.samples:
            if sample.id in by_id:
                raise DataError(f"duplicate sample id {sample.id!r}")
            by_id[sample.id] = sample
            seen = source_text.setdefault(sample.source_id, sample.source)
            if seen != sample.source:
                raise DataError(
                    f"samples under source_id {sample.source_id!r} disagree on source text"
                )
        label_index: dict[tuple[str, str], GoldenLabel] = {}
        for label in self.labels:
            if label.sample_id not in by_id:
                raise DataError(f"label references unknown sample id {label.sample_id!r}")
            key = (label.sample_id, label.aspect)
            if key in label_index:
                raise DataError(
                    f"duplicate label for sample {label.sample_id!r} on aspect {label.aspect!r}"
                )
            label_index[key] = label
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_label_index", label_index)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def aspects(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for label in self.labels:
            seen.setdefault(label.aspect, None)
        return tuple(seen)

    def sample(self, sample_id: str) -> Sample:
        try:
            return self._by_id[sample_id]
        except KeyError:
            raise DataError(f"unknown sample id {sample_id!r}") from None

    def label_for(self, sample_id: str, aspect: str) -> GoldenLabel:
        try:
            return self._label_index[(sample_id, aspect)]
        except KeyError:
            raise DataError(
                f"sample {sample_id!r} has no label for aspect {aspect!r}"
            ) from None

    def resolve_aspect(self, aspect: str | None) -> str:
        if aspect is not None:
            return aspect
        names = self.aspects
        if len(names) != 1:
            raise DataError(
                f"golden set {self.name!r} labels {len(names)} aspects; one must be named"
            )
        return names[0]

    def ordered_pairs(self, aspect: str | None = None) -> list[tuple[Sample, GoldenLabel]]:
        """(sample, label) pairs in stable ingestion order."""
        aspect = self.resolve_aspect(aspect)
        return [(s, self.label_for(s.id, aspect)) for s in self.samples]

    def require_complete(self, aspect: str) -> None:
        for sample in self.samples:
            self.label_for(sample.id, aspect)

    def distinct_scores(self, aspect: str | None = None) -> frozenset[float]:
        aspect = self.resolve_aspect(aspect)
        return frozenset(label.score for _, label in self.ordered_pairs(aspect))

    def records(self, aspect: str | None = None) -> list[dict]:
        aspect = self.resolve_aspect(aspect)
        return [
            {
                "id": s.id,
                "source_id": s.source_id,
                "system_id": s.system_id,
                "source": s.source,
                "target": s.target,
                "score": label.score,
            }
            for s, label in self.ordered_pairs(aspect)
        ]

    def digest(self, aspect: str | None = None) -> str:
        """Content digest of the set, stable across process runs.

        Only the records and the resolved aspect participate, so renaming a
        set never invalidates caches or reproducibility comparisons.
        """
        return json_digest(
            {"aspect": self.resolve_aspect(aspect), "records": self.records(aspect)}
        )


def _record_error(path: Path, line_no: int, message: str) -> DataError:
    return DataError(f"{path}: line {line_no}: {message}")


def ingest_golden_set(path: str | Path, aspect: Aspect) -> GoldenSet:
    """Read a line-delimited golden-set file labeled for one aspect.

    Every line must be a JSON object with exactly the fields
    ``id, source_id, system_id, source, target, score``. Unknown fields,
    duplicate ids, missing or out-of-range scores all fail hard with the
    offending line number.
    """
    path = Path(path)
    samples: list[Sample] = []
    labels: list[GoldenLabel] = []
    seen_ids: set[str] = set()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read golden set {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise _record_error(path, line_no, f"malformed record: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise _record_error(path, line_no, "record must be a JSON object")
        unknown = sorted(set(record) - set(RECORD_FIELDS))
        if unknown:
            raise _record_error(path, line_no, f"unknown fields: {', '.join(unknown)}")
        missing = [f for f in RECORD_FIELDS if f not in record]
        if missing:
            raise _record_error(path, line_no, f"missing fields: {', '.join(missing)}")
        ident = record["id"]
        if isinstance(ident, bool) or not isinstance(ident, (str, int)):
            raise _record_error(path, line_no, "id must be a string or integer")
        sample_id = str(ident)
        if sample_id in seen_ids:
            raise _record_error(path, line_no, f"duplicate sample id {sample_id!r}")
        seen_ids.add(sample_id)
        for key in ("source", "target"):
            if not isinstance(record[key], str):
                raise _record_error(path, line_no, f"{key} must be a string")
        score = record["score"]
        if score is None:
            raise _record_error(
                path, line_no, f"sample {sample_id!r} is missing a label for {aspect.name!r}"
            )
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise _record_error(path, line_no, "score must be a number")
        if not aspect.contains(float(score)):
            raise _record_error(
                path,
                line_no,
                f"score {score} outside [{aspect.scale_min}, {aspect.scale_max}]"
                f" for aspect {aspect.name!r}",
            )
        try:
            samples.append(
                Sample(
                    id=sample_id,
                    source=record["source"],
                    target=record["target"],
                    system_id=str(record["system_id"]),
                    source_id=str(record["source_id"]),
                )
            )
        except DataError as exc:
            raise _record_error(path, line_no, str(exc)) from exc
        labels.append(GoldenLabel(sample_id=sample_id, aspect=aspect.name, score=float(score)))
    return GoldenSet(samples=tuple(samples), labels=tuple(labels), name=path.stem)


def write_golden_set(golden: GoldenSet, path: str | Path, aspect: str | None = None) -> None:
    """Serialize a golden set back to the line-delimited ingestion format."""
    path = Path(path)
    lines = [
        json.dumps(record, ensure_ascii=False, sort_keys=True)
        for record in golden.records(aspect)
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_aspect_manifest(path: str | Path) -> dict[str, Aspect]:
    """Load every aspect declared in a manifest file, keyed by name."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read aspect manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"aspect manifest {path} is not valid JSON: {exc.msg}") from exc
    entries = raw if isinstance(raw, list) else [raw]
    aspects: dict[str, Aspect] = {}
    for entry in entries:
        if not isinstance(entry, dict) or "name" not in entry:
            raise DataError(f"aspect manifest {path}: each entry needs at least a name")
        known = {"name", "scale_min", "scale_max", "scale_step"}
        unknown = sorted(set(entry) - known)
        if unknown:
            raise DataError(f"aspect manifest {path}: unknown fields: {', '.join(unknown)}")
        try:
            aspect = Aspect(
                name=entry["name"],
                scale_min=float(entry.get("scale_min", 1)),
                scale_max=float(entry.get("scale_max", 5)),
                scale_step=float(entry.get("scale_step", 1)),
            )
        except (TypeError, ValueError) as exc:
            raise DataError(f"aspect manifest {path}: bad scale values: {exc}") from exc
        if aspect.name in aspects:
            raise DataError(f"aspect manifest {path}: duplicate aspect {aspect.name!r}")
        aspects[aspect.name] = aspect
    return aspects


def load_aspect(path: str | Path, name: str) -> Aspect:
    aspects = load_aspect_manifest(path)
    if name not in aspects:
        raise DataError(f"aspect {name!r} not declared in manifest {path}")
    return aspects[name]


def partition_by_source(
    golden: GoldenSet, aspect: str | None = None
) -> dict[str, list[tuple[Sample, GoldenLabel]]]:
    """Group (sample, label) pairs by source_id.

    Keys appear in first-appearance order; within a group, pairs are sorted
    by system_id so repeated partitions of the same set align positionally.
    """
    aspect = golden.resolve_aspect(aspect)
    groups: dict[str, list[tuple[Sample, GoldenLabel]]] = {}
    for sample, label in golden.ordered_pairs(aspect):
        groups.setdefault(sample.source_id, []).append((sample, label))
    for pairs in groups.values():
        pairs.sort(key=lambda pair: pair[0].system_id)
    return groups
