"""Rank-correlation statistics and the human-agreement objective.

The coefficients are computed in exact-leaning arithmetic (fsum sums,
integer pair counts, fractional ranks that are exact halves) so that on
cleanly rational inputs the results are the true rational values, bit for
bit. Library implementations drift by a few ulp on such inputs, which is
why this module carries its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum
from statistics import fmean
from typing import Iterable, Sequence

from .corpus import GoldenSet, partition_by_source
from .errors import DataError
from .records import EvaluationRecord

__all__ = [
    "COEFFICIENTS",
    "LEVELS",
    "PairedScores",
    "CorrelationReport",
    "Objective",
    "pearson",
    "spearman",
    "kendall",
    "meta_eval_sample_level",
    "meta_eval_dataset_level",
]

COEFFICIENTS = ("pearson", "spearman", "kendall")
LEVELS = ("dataset", "sample")


@dataclass(frozen=True)
class PairedScores:
    """Aligned machine and human scores for the same samples."""

    predicted: tuple[float, ...]
    human: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.predicted) != len(self.human):
            raise ValueError(
                f"paired scores differ in length: {len(self.predicted)} vs {len(self.human)}"
            )

    def __len__(self) -> int:
        return len(self.predicted)


def _as_pairs(pairs: PairedScores | tuple) -> PairedScores:
    if isinstance(pairs, PairedScores):
        return pairs
    predicted, human = pairs
    return PairedScores(tuple(predicted), tuple(human))


def _is_constant(values: Sequence[float]) -> bool:
    first = values[0]
    return all(v == first for v in values)


def _check_defined(pairs: PairedScores) -> bool:
    """True when every coefficient is defined on these pairs.

    All three coefficients share the same degeneracy condition: fewer than
    two pairs never reaches here (callers raise), and a constant vector on
    either side zeroes the variance, the rank variance, and the tie-corrected
    pair counts alike.
    """
    return not (_is_constant(pairs.predicted) or _is_constant(pairs.human))


def _require_length(pairs: PairedScores) -> None:
    if len(pairs) < 2:
        raise ValueError(f"correlation needs at least 2 pairs, got {len(pairs)}")


def _fractional_ranks(values: Sequence[float]) -> tuple[float, ...]:
    """1-based ranks with ties sharing their average rank (always a half)."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    start = 0
    while start < len(order):
        stop = start
        while stop + 1 < len(order) and values[order[stop + 1]] == values[order[start]]:
            stop += 1
        shared = (start + stop) / 2 + 1
        for position in range(start, stop + 1):
            ranks[order[position]] = shared
        start = stop + 1
    return tuple(ranks)


def _pearson_core(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mean_x = fsum(xs) / n
    mean_y = fsum(ys) / n
    cov = fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = fsum((x - mean_x) ** 2 for x in xs)
    var_y = fsum((y - mean_y) ** 2 for y in ys)
    return cov / math.sqrt(var_x * var_y)


def pearson(pairs: PairedScores | tuple) -> float | None:
    """Product-moment correlation, or None when either side is constant."""
    pairs = _as_pairs(pairs)
    _require_length(pairs)
    if not _check_defined(pairs):
        return None
    return _pearson_core(pairs.predicted, pairs.human)


def spearman(pairs: PairedScores | tuple) -> float | None:
    """Pearson correlation of fractional ranks, or None when degenerate."""
    pairs = _as_pairs(pairs)
    _require_length(pairs)
    if not _check_defined(pairs):
        return None
    return _pearson_core(
        _fractional_ranks(pairs.predicted), _fractional_ranks(pairs.human)
    )


def kendall(pairs: PairedScores | tuple) -> float | None:
    """Tie-corrected Kendall tau-b, or None when either side fully ties."""
    pairs = _as_pairs(pairs)
    _require_length(pairs)
    if not _check_defined(pairs):
        return None
    xs, ys = pairs.predicted, pairs.human
    n = len(xs)
    concordant = discordant = tied_x = tied_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx == 0:
                tied_x += 1
            if dy == 0:
                tied_y += 1
            if dx == 0 or dy == 0:
                continue
            if (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    total = n * (n - 1) // 2
    return (concordant - discordant) / math.sqrt(
        (total - tied_x) * (total - tied_y)
    )


_COEFFICIENT_FUNCS = {"pearson": pearson, "spearman": spearman, "kendall": kendall}


@dataclass(frozen=True)
class CorrelationReport:
    """All three coefficients at one meta-evaluation level.

    A None coefficient means undefined (degenerate input), which is never
    conflated with a zero correlation. ``n_groups_defined`` counts the
    source groups that contributed at sample level; at dataset level the
    whole flattened set is the single group.
    """

    pearson_r: float | None
    spearman_rho: float | None
    kendall_tau: float | None
    level: str
    n_groups_total: int
    n_groups_defined: int

    def __post_init__(self) -> None:
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level!r}")

    def value(self, coefficient: str) -> float | None:
        if coefficient not in COEFFICIENTS:
            raise ValueError(f"unknown coefficient {coefficient!r}")
        return {
            "pearson": self.pearson_r,
            "spearman": self.spearman_rho,
            "kendall": self.kendall_tau,
        }[coefficient]

    def to_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "spearman_rho": self.spearman_rho,
            "kendall_tau": self.kendall_tau,
            "level": self.level,
            "n_groups_total": self.n_groups_total,
            "n_groups_defined": self.n_groups_defined,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CorrelationReport":
        return cls(
            pearson_r=payload["pearson_r"],
            spearman_rho=payload["spearman_rho"],
            kendall_tau=payload["kendall_tau"],
            level=payload["level"],
            n_groups_total=payload["n_groups_total"],
            n_groups_defined=payload["n_groups_defined"],
        )


def _index_records(
    golden: GoldenSet, records: Iterable[EvaluationRecord], aspect: str
) -> dict[str, EvaluationRecord]:
    golden_ids = {sample.id for sample, _ in golden.ordered_pairs(aspect)}
    indexed: dict[str, EvaluationRecord] = {}
    for record in records:
        if record.sample_id in indexed:
            raise DataError(f"duplicate evaluation record for sample {record.sample_id!r}")
        if record.sample_id not in golden_ids:
            raise DataError(
                f"evaluation record for unknown sample {record.sample_id!r}"
            )
        indexed[record.sample_id] = record
    for sample, _ in golden.ordered_pairs(aspect):
        if sample.id not in indexed:
            raise DataError(f"missing evaluation record for sample {sample.id!r}")
    return indexed


def _group_pairs(
    pairs: list[tuple[float | None, float]]
) -> PairedScores | None:
    """Pairs with an excluded prediction are dropped before correlating."""
    kept = [(p, h) for p, h in pairs if p is not None]
    if len(kept) < 2:
        return None
    return PairedScores(tuple(p for p, _ in kept), tuple(h for _, h in kept))


def meta_eval_sample_level(
    golden: GoldenSet,
    records: Iterable[EvaluationRecord],
    aspect: str | None = None,
) -> CorrelationReport:
    """Mean correlation across source groups.

    Each coefficient is computed per source group and averaged over the
    groups where it is defined; undefined groups are skipped and disclosed
    through the group counts. The result is undefined when no group is.
    """
    aspect = golden.resolve_aspect(aspect)
    indexed = _index_records(golden, records, aspect)
    groups = partition_by_source(golden, aspect)
    per_group: dict[str, list[float]] = {c: [] for c in COEFFICIENTS}
    defined = 0
    for pairs in groups.values():
        scored = _group_pairs(
            [(indexed[s.id].parsed_score, label.score) for s, label in pairs]
        )
        if scored is None or not _check_defined(scored):
            continue
        defined += 1
        for name, func in _COEFFICIENT_FUNCS.items():
            value = func(scored)
            assert value is not None
            per_group[name].append(value)
    return CorrelationReport(
        pearson_r=fmean(per_group["pearson"]) if defined else None,
        spearman_rho=fmean(per_group["spearman"]) if defined else None,
        kendall_tau=fmean(per_group["kendall"]) if defined else None,
        level="sample",
        n_groups_total=len(groups),
        n_groups_defined=defined,
    )


def meta_eval_dataset_level(
    golden: GoldenSet,
    records: Iterable[EvaluationRecord],
    aspect: str | None = None,
) -> CorrelationReport:
    """Correlation over all pairs flattened in stable sample order."""
    aspect = golden.resolve_aspect(aspect)
    indexed = _index_records(golden, records, aspect)
    scored = _group_pairs(
        [
            (indexed[s.id].parsed_score, label.score)
            for s, label in golden.ordered_pairs(aspect)
        ]
    )
    defined = scored is not None and _check_defined(scored)
    return CorrelationReport(
        pearson_r=pearson(scored) if defined else None,
        spearman_rho=spearman(scored) if defined else None,
        kendall_tau=kendall(scored) if defined else None,
        level="dataset",
        n_groups_total=1,
        n_groups_defined=1 if defined else 0,
    )


@dataclass(frozen=True)
class Objective:
    """The scalar ranking target: one coefficient at one level."""

    coefficient: str = "spearman"
    level: str = "dataset"

    def __post_init__(self) -> None:
        if self.coefficient not in COEFFICIENTS:
            raise ValueError(f"coefficient must be one of {COEFFICIENTS}")
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}")

    def evaluate(
        self,
        golden: GoldenSet,
        records: Iterable[EvaluationRecord],
        aspect: str | None = None,
    ) -> CorrelationReport:
        if self.level == "dataset":
            return meta_eval_dataset_level(golden, records, aspect)
        return meta_eval_sample_level(golden, records, aspect)

    def value(self, report: CorrelationReport) -> float | None:
        return report.value(self.coefficient)

    def describe(self) -> str:
        return f"{self.level}-level {self.coefficient}"
