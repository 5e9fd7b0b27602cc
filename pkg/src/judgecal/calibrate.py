"""Draft, rank, and refine scoring criteria against a golden set."""
from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Aspect, GoldenSet
from .errors import BackendError, DataError, UnparseableScoreError
from .llm.base import Backend, GenerationRequest
from .metrics import CorrelationReport, Objective
from .prompts import (
    RETRY_SUFFIX,
    TASK_KINDS,
    MisalignedExample,
    MisalignmentSet,
    TemplateSpec,
    load_template,
    parse_score,
    render_drafting_prompt,
    render_evaluation_prompt,
    render_refinement_prompt,
    sample_exemplars,
)
from .records import EvaluationRecord
from .seeding import derive_seed, json_digest, text_digest

__all__ = [
    "Criteria",
    "CalibrationConfig",
    "CandidateRecord",
    "CalibrationResult",
    "AuditLog",
    "criteria_id",
    "draft_pool",
    "score_pool",
    "score_records",
    "select_top_k",
    "rank_candidates",
    "collect_misaligned",
    "refine_pool",
    "calibrate",
]

PROVENANCES = ("drafted", "refined")
PATTERN_TAGS = ("holistic", "specific", "unknown")

_DRAFT_SIZES = {
    "summarization": (4, 6, 8, 10, 12),
    "data_to_text": (4, 6, 8, 10, 12, 14),
    "hallucination": (6, 8, 10, 12, 14, 16),
}
_DRAFT_TRIALS = {"summarization": 4, "data_to_text": 4, "hallucination": 3}


def criteria_id(text: str) -> str:
    """Stable content digest identifying a criteria text."""
    return text_digest(text)[:16]


@dataclass(frozen=True)
class Criteria:
    """One natural-language scoring rubric and where it came from.

    ``pattern_tag`` is annotation-only metadata (holistic vs per-score
    rubrics); nothing in the pipeline assigns or consumes it.
    """

    text: str
    provenance: str
    parent_id: str | None = None
    exemplar_seed: int = 0
    exemplar_size: int = 0
    pattern_tag: str = "unknown"

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("criteria text must be non-empty")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        if self.provenance == "refined" and not self.parent_id:
            raise ValueError("refined criteria must name a parent_id")
        if self.pattern_tag not in PATTERN_TAGS:
            raise ValueError(f"pattern_tag must be one of {PATTERN_TAGS}")

    @property
    def id(self) -> str:
        return criteria_id(self.text)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "provenance": self.provenance,
            "parent_id": self.parent_id,
            "exemplar_seed": self.exemplar_seed,
            "exemplar_size": self.exemplar_size,
            "pattern_tag": self.pattern_tag,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Criteria":
        loaded = cls(
            text=payload["text"],
            provenance=payload.get("provenance", "drafted"),
            parent_id=payload.get("parent_id"),
            exemplar_seed=payload.get("exemplar_seed", 0),
            exemplar_size=payload.get("exemplar_size", 0),
            pattern_tag=payload.get("pattern_tag", "unknown"),
        )
        stored = payload.get("id")
        if stored is not None and stored != loaded.id:
            raise DataError(
                f"criteria file id {stored!r} does not match its text digest {loaded.id!r}"
            )
        return loaded


@dataclass(frozen=True)
class CalibrationConfig:
    """Every knob of one calibration run.

    ``exemplar_sizes`` x ``mc_trials`` drafting prompts are issued, each
    sampled ``sampling_count`` times; the top ``pool_size`` candidates are
    refined over ``refine_exemplar_sizes`` x ``refine_trials`` prompts with
    ``refine_sampling_count`` samples each.
    """

    task_kind: str = "summarization"
    exemplar_sizes: tuple[int, ...] = _DRAFT_SIZES["summarization"]
    mc_trials: int = 4
    sampling_count: int = 3
    pool_size: int = 3
    refine_exemplar_sizes: tuple[int, ...] = (1, 2, 4)
    refine_trials: int = 4
    refine_sampling_count: int = 2
    objective: Objective = field(default_factory=Objective)
    misalignment_min_gap_steps: float = 1.0
    misalignment_top_m: int | None = None
    max_exclusion_fraction: float = 0.2
    master_seed: int = 0
    draft_temperature: float = 1.0
    eval_temperature: float = 0.0
    refine_temperature: float = 1.0
    draft_max_tokens: int = 768
    eval_max_tokens: int = 20
    refine_max_tokens: int = 768

    def __post_init__(self) -> None:
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"task_kind must be one of {TASK_KINDS}")
        for name, sizes in (
            ("exemplar_sizes", self.exemplar_sizes),
            ("refine_exemplar_sizes", self.refine_exemplar_sizes),
        ):
            if not sizes:
                raise ValueError(f"{name} must be non-empty")
            if any(s < 1 for s in sizes):
                raise ValueError(f"{name} entries must be positive")
            if len(set(sizes)) != len(sizes):
                raise ValueError(f"{name} entries must be distinct")
        for name, count in (
            ("mc_trials", self.mc_trials),
            ("sampling_count", self.sampling_count),
            ("pool_size", self.pool_size),
            ("refine_trials", self.refine_trials),
            ("refine_sampling_count", self.refine_sampling_count),
        ):
            if count < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 < self.max_exclusion_fraction < 1:
            raise ValueError("max_exclusion_fraction must sit strictly between 0 and 1")
        if self.misalignment_min_gap_steps <= 0:
            raise ValueError("misalignment_min_gap_steps must be positive")
        if self.misalignment_top_m is not None and self.misalignment_top_m < 1:
            raise ValueError("misalignment_top_m must be >= 1 when given")
        for name, temp in (
            ("draft_temperature", self.draft_temperature),
            ("eval_temperature", self.eval_temperature),
            ("refine_temperature", self.refine_temperature),
        ):
            if temp < 0:
                raise ValueError(f"{name} must be >= 0")
        for name, tokens in (
            ("draft_max_tokens", self.draft_max_tokens),
            ("eval_max_tokens", self.eval_max_tokens),
            ("refine_max_tokens", self.refine_max_tokens),
        ):
            if tokens < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def misalignment_draw_cap(self) -> int:
        if self.misalignment_top_m is not None:
            return self.misalignment_top_m
        return max(self.refine_exemplar_sizes)

    @classmethod
    def for_task(cls, task_kind: str, **overrides) -> "CalibrationConfig":
        """The documented defaults for one task kind, plus overrides."""
        if task_kind not in TASK_KINDS:
            raise ValueError(f"task_kind must be one of {TASK_KINDS}")
        base = dict(
            task_kind=task_kind,
            exemplar_sizes=_DRAFT_SIZES[task_kind],
            mc_trials=_DRAFT_TRIALS[task_kind],
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return {
            "task_kind": self.task_kind,
            "exemplar_sizes": list(self.exemplar_sizes),
            "mc_trials": self.mc_trials,
            "sampling_count": self.sampling_count,
            "pool_size": self.pool_size,
            "refine_exemplar_sizes": list(self.refine_exemplar_sizes),
            "refine_trials": self.refine_trials,
            "refine_sampling_count": self.refine_sampling_count,
            "objective": {
                "coefficient": self.objective.coefficient,
                "level": self.objective.level,
            },
            "misalignment_min_gap_steps": self.misalignment_min_gap_steps,
            "misalignment_top_m": self.misalignment_top_m,
            "max_exclusion_fraction": self.max_exclusion_fraction,
            "master_seed": self.master_seed,
            "draft_temperature": self.draft_temperature,
            "eval_temperature": self.eval_temperature,
            "refine_temperature": self.refine_temperature,
            "draft_max_tokens": self.draft_max_tokens,
            "eval_max_tokens": self.eval_max_tokens,
            "refine_max_tokens": self.refine_max_tokens,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CalibrationConfig":
        payload = dict(payload)
        task_kind = payload.pop("task_kind", "summarization")
        objective = payload.pop("objective", None)
        kwargs: dict = {}
        for key in (
            "mc_trials",
            "sampling_count",
            "pool_size",
            "refine_trials",
            "refine_sampling_count",
            "misalignment_min_gap_steps",
            "misalignment_top_m",
            "max_exclusion_fraction",
            "master_seed",
            "draft_temperature",
            "eval_temperature",
            "refine_temperature",
            "draft_max_tokens",
            "eval_max_tokens",
            "refine_max_tokens",
        ):
            if key in payload:
                kwargs[key] = payload.pop(key)
        for key in ("exemplar_sizes", "refine_exemplar_sizes"):
            if key in payload:
                kwargs[key] = tuple(payload.pop(key))
        if objective is not None:
            kwargs["objective"] = Objective(
                coefficient=objective.get("coefficient", "spearman"),
                level=objective.get("level", "dataset"),
            )
        if payload:
            raise ValueError(f"unknown calibration fields: {', '.join(sorted(payload))}")
        return cls.for_task(task_kind, **kwargs)

    def digest(self) -> str:
        return json_digest(self.to_dict())


@dataclass(frozen=True)
class CandidateRecord:
    """A scored candidate: its criteria, report, and per-sample records."""

    criteria: Criteria
    report: CorrelationReport
    records: tuple[EvaluationRecord, ...]
    errors: int
    valid: bool

    def to_dict(self) -> dict:
        return {
            "criteria": self.criteria.to_dict(),
            "report": self.report.to_dict(),
            "records": [r.to_dict() for r in self.records],
            "errors": self.errors,
            "valid": self.valid,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CandidateRecord":
        return cls(
            criteria=Criteria.from_dict(payload["criteria"]),
            report=CorrelationReport.from_dict(payload["report"]),
            records=tuple(EvaluationRecord.from_dict(r) for r in payload["records"]),
            errors=payload["errors"],
            valid=payload["valid"],
        )


class AuditLog:
    """Append-only record of every decision a run makes.

    Events carry a sequence number instead of wall-clock time so two
    identical runs produce byte-identical logs and digests.
    """

    def __init__(self) -> None:
        self.events: list[dict] = []

    def record(self, event: str, **fields) -> None:
        self.events.append({"seq": len(self.events), "event": event, **fields})

    def count(self, event: str) -> int:
        return sum(1 for e in self.events if e["event"] == event)

    def lines(self) -> list[str]:
        return [
            json.dumps(e, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
            for e in self.events
        ]

    def digest(self) -> str:
        return text_digest("\n".join(self.lines()))

    def write(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "AuditLog":
        log = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                log.events.append(json.loads(line))
        return log


@dataclass(frozen=True)
class CalibrationResult:
    final: CandidateRecord
    ranked: tuple[CandidateRecord, ...]
    top: tuple[CandidateRecord, ...]
    best_draft_objective: float
    audit: AuditLog


def _dedup(criteria: list[Criteria], seen: set[str] | None = None) -> list[Criteria]:
    """Drop duplicate texts, keeping the first occurrence."""
    seen = set() if seen is None else set(seen)
    unique: list[Criteria] = []
    for c in criteria:
        if c.id in seen:
            continue
        seen.add(c.id)
        unique.append(c)
    return unique


def draft_pool(
    golden: GoldenSet,
    aspect: Aspect,
    cfg: CalibrationConfig,
    backend: Backend,
    audit: AuditLog | None = None,
    template: TemplateSpec | None = None,
) -> list[Criteria]:
    """Monte-Carlo draft of candidate criteria from exemplar draws.

    Issues one drafting prompt per (exemplar size, trial) with
    ``sampling_count`` completions each, then deduplicates by content.
    On backend failure the partial pool is attached to the raised error.
    """
    audit = audit if audit is not None else AuditLog()
    template = template or load_template("drafting", cfg.task_kind)
    raw: list[Criteria] = []
    try:
        for size in cfg.exemplar_sizes:
            for trial in range(cfg.mc_trials):
                seed = derive_seed(cfg.master_seed, "draft", size, trial)
                exemplars = sample_exemplars(golden, size, seed, aspect.name)
                prompt = render_drafting_prompt(template, aspect, exemplars)
                request = GenerationRequest(
                    prompt=prompt,
                    temperature=cfg.draft_temperature,
                    max_tokens=cfg.draft_max_tokens,
                    n_samples=cfg.sampling_count,
                )
                audit.record(
                    "draft_call",
                    exemplar_size=size,
                    trial=trial,
                    seed=seed,
                    prompt_digest=text_digest(prompt),
                    n_samples=request.effective_n_samples,
                )
                response = backend.generate(request)
                for index, completion in enumerate(response.completions):
                    text = completion.strip()
                    ident = criteria_id(text) if text else None
                    audit.record(
                        "draft_raw",
                        criteria_id=ident,
                        exemplar_size=size,
                        trial=trial,
                        index=index,
                        discarded=not text,
                    )
                    if not text:
                        continue
                    raw.append(
                        Criteria(
                            text=text,
                            provenance="drafted",
                            exemplar_seed=seed,
                            exemplar_size=size,
                        )
                    )
    except BackendError as exc:
        exc.partial_pool = _dedup(raw)
        raise
    pool = _dedup(raw)
    audit.record("draft_pool", raw_count=audit.count("draft_raw"), unique_count=len(pool))
    return pool


def _score_one(
    criteria_text: str | None,
    ident: str,
    sample,
    label,
    aspect: Aspect,
    cfg: CalibrationConfig,
    backend: Backend,
    template: TemplateSpec,
) -> tuple[EvaluationRecord, list[dict]]:
    """Score one sample, retrying once on an unparseable completion."""
    prompt = render_evaluation_prompt(template, aspect, criteria_text, sample)
    events: list[dict] = []
    request = GenerationRequest(
        prompt=prompt,
        temperature=cfg.eval_temperature,
        max_tokens=cfg.eval_max_tokens,
        n_samples=1,
    )
    completion = backend.generate(request).completions[0]
    retried = False
    try:
        score = parse_score(completion, aspect)
    except UnparseableScoreError:
        retried = True
        retry_request = GenerationRequest(
            prompt=prompt + RETRY_SUFFIX,
            temperature=0.0,
            max_tokens=cfg.eval_max_tokens,
            n_samples=1,
        )
        completion = backend.generate(retry_request).completions[0]
        try:
            score = parse_score(completion, aspect)
        except UnparseableScoreError:
            score = None
    record = EvaluationRecord(
        sample_id=sample.id,
        criteria_id=ident,
        aspect=aspect.name,
        raw_completion=completion,
        parsed_score=score,
    )
    events.append(
        {
            "event": "eval_call",
            "criteria_id": ident,
            "sample_id": sample.id,
            "prompt_digest": text_digest(prompt),
            "retried": retried,
            "excluded": score is None,
        }
    )
    return record, events


def score_records(
    golden: GoldenSet,
    aspect: Aspect,
    cfg: CalibrationConfig,
    backend: Backend,
    criteria_text: str | None,
    ident: str,
    audit: AuditLog | None = None,
    template: TemplateSpec | None = None,
) -> tuple[EvaluationRecord, ...]:
    """Score every golden sample under one criteria text (or none).

    Calls fan out up to the backend's concurrency budget; records and audit
    events are joined back in golden-set order, so the output is identical
    at any concurrency level.
    """
    template = template or load_template("evaluation", cfg.task_kind)
    pairs = golden.ordered_pairs(aspect.name)
    workers = max(1, min(getattr(backend, "max_concurrency", 1), len(pairs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(
            pool.map(
                lambda pair: _score_one(
                    criteria_text, ident, pair[0], pair[1], aspect, cfg, backend, template
                ),
                pairs,
            )
        )
    if audit is not None:
        for _, events in results:
            for event in events:
                audit.record(**event)
    return tuple(record for record, _ in results)


def score_pool(
    pool: list[Criteria],
    golden: GoldenSet,
    aspect: Aspect,
    cfg: CalibrationConfig,
    backend: Backend,
    audit: AuditLog | None = None,
    template: TemplateSpec | None = None,
) -> list[CandidateRecord]:
    """Score every candidate on every golden sample at greedy temperature.

    A candidate whose exclusions exceed the configured fraction of the
    golden set is marked invalid; its report is still computed over the
    samples that parsed.
    """
    audit = audit if audit is not None else AuditLog()
    template = template or load_template("evaluation", cfg.task_kind)
    n = len(golden)
    scored: list[CandidateRecord] = []
    for criteria in pool:
        records = score_records(
            golden, aspect, cfg, backend, criteria.text, criteria.id, audit, template
        )
        errors = sum(1 for r in records if r.excluded)
        report = cfg.objective.evaluate(golden, records, aspect.name)
        valid = errors <= cfg.max_exclusion_fraction * n
        value = cfg.objective.value(report)
        audit.record(
            "candidate_scored",
            criteria_id=criteria.id,
            provenance=criteria.provenance,
            objective=value,
            defined=value is not None,
            errors=errors,
            valid=valid,
        )
        scored.append(
            CandidateRecord(
                criteria=criteria,
                report=report,
                records=records,
                errors=errors,
                valid=valid,
            )
        )
    return scored


def _rank_key(candidate: CandidateRecord, objective: Objective):
    value = objective.value(candidate.report)
    if not candidate.valid:
        tier = 2
    elif value is None:
        tier = 1
    else:
        tier = 0
    return (tier, -(value if value is not None else 0.0), candidate.errors, candidate.criteria.id)


def rank_candidates(
    candidates: list[CandidateRecord], objective: Objective
) -> list[CandidateRecord]:
    """Full ordering: defined valid first, undefined next, invalid last."""
    return sorted(candidates, key=lambda c: _rank_key(c, objective))


def select_top_k(
    candidates: list[CandidateRecord],
    k: int,
    objective: Objective | None = None,
) -> list[CandidateRecord]:
    """The k best selectable candidates.

    Only valid candidates with a defined objective are selectable; ties are
    broken by fewer exclusions and then lexicographic criteria id. Fewer
    than k survivors simply yields all of them.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    objective = objective or Objective()
    eligible = [
        c for c in candidates if c.valid and objective.value(c.report) is not None
    ]
    return rank_candidates(eligible, objective)[:k]


def collect_misaligned(
    candidate: CandidateRecord,
    golden: GoldenSet,
    aspect: Aspect,
    cfg: CalibrationConfig,
) -> MisalignmentSet:
    """Samples where this candidate drifted furthest from the human label.

    Keeps records whose absolute gap reaches the configured number of scale
    steps, sorted by descending gap (ties in golden order), capped at the
    misalignment draw cap. Excluded samples have no machine score and never
    qualify.
    """
    min_gap = cfg.misalignment_min_gap_steps * aspect.scale_step
    gapped: list[tuple[float, MisalignedExample]] = []
    for record in candidate.records:
        if record.parsed_score is None:
            continue
        human = golden.label_for(record.sample_id, aspect.name).score
        gap = abs(record.parsed_score - human)
        if gap >= min_gap - 1e-9:
            gapped.append(
                (
                    gap,
                    MisalignedExample(
                        sample=golden.sample(record.sample_id),
                        human_score=human,
                        llm_score=record.parsed_score,
                    ),
                )
            )
    gapped.sort(key=lambda pair: -pair[0])
    items = tuple(item for _, item in gapped[: cfg.misalignment_draw_cap])
    return MisalignmentSet(items=items, criteria_id=candidate.criteria.id)


def refine_pool(
    top: list[CandidateRecord],
    golden: GoldenSet,
    aspect: Aspect,
    cfg: CalibrationConfig,
    backend: Backend,
    audit: AuditLog | None = None,
    template: TemplateSpec | None = None,
) -> list[Criteria]:
    """Rewrite each selected candidate against its own misalignments.

    Candidates that already agree everywhere have nothing to refine and are
    skipped with a logged decision. Refined texts are deduplicated against
    each other and against their parents.
    """
    audit = audit if audit is not None else AuditLog()
    template = template or load_template("refinement", cfg.task_kind)
    raw: list[Criteria] = []
    parent_ids = {c.criteria.id for c in top}
    for candidate in top:
        misaligned = collect_misaligned(candidate, golden, aspect, cfg)
        audit.record(
            "misaligned_collected",
            criteria_id=candidate.criteria.id,
            count=len(misaligned),
        )
        if not misaligned.items:
            audit.record(
                "refine_skipped",
                criteria_id=candidate.criteria.id,
                reason="no misaligned samples",
            )
            continue
        for size in cfg.refine_exemplar_sizes:
            for trial in range(cfg.refine_trials):
                seed = derive_seed(
                    cfg.master_seed, "refine", candidate.criteria.id, size, trial
                )
                rng = random.Random(seed)
                draw_size = min(size, len(misaligned.items))
                drawn = tuple(rng.sample(list(misaligned.items), draw_size))
                subset = MisalignmentSet(items=drawn, criteria_id=misaligned.criteria_id)
                prompt = render_refinement_prompt(
                    template, aspect, candidate.criteria.text, subset
                )
                request = GenerationRequest(
                    prompt=prompt,
                    temperature=cfg.refine_temperature,
                    max_tokens=cfg.refine_max_tokens,
                    n_samples=cfg.refine_sampling_count,
                )
                audit.record(
                    "refine_call",
                    parent_id=candidate.criteria.id,
                    exemplar_size=size,
                    trial=trial,
                    seed=seed,
                    prompt_digest=text_digest(prompt),
                    n_samples=request.effective_n_samples,
                )
                response = backend.generate(request)
                for index, completion in enumerate(response.completions):
                    text = completion.strip()
                    ident = criteria_id(text) if text else None
                    audit.record(
                        "refine_raw",
                        criteria_id=ident,
                        parent_id=candidate.criteria.id,
                        exemplar_size=size,
                        trial=trial,
                        index=index,
                        discarded=not text,
                    )
                    if not text:
                        continue
                    raw.append(
                        Criteria(
                            text=text,
                            provenance="refined",
                            parent_id=candidate.criteria.id,
                            exemplar_seed=seed,
                            exemplar_size=draw_size,
                        )
                    )
    refined = _dedup(raw, seen=parent_ids)
    audit.record(
        "refine_pool",
        raw_count=audit.count("refine_raw"),
        unique_new=len(refined),
    )
    return refined


def calibrate(
    golden: GoldenSet,
    aspect: Aspect,
    cfg: CalibrationConfig,
    backend: Backend,
    audit: AuditLog | None = None,
    checkpoint_dir: str | Path | None = None,
    resume: bool = False,
) -> CalibrationResult:
    """Run the full pipeline: draft, score, select, refine, re-score, pick.

    The final criteria is the argmax over the selected top candidates plus
    every refined newcomer, so refinement can only improve the final
    objective. All randomness descends from ``cfg.master_seed``; the audit
    log digests identically across reruns on identical inputs.
    """
    audit = audit if audit is not None else AuditLog()
    golden.require_complete(aspect.name)
    if len(golden.distinct_scores(aspect.name)) < 2:
        raise DataError(
            f"golden set {golden.name!r} is degenerate for {aspect.name!r}: "
            "calibration needs at least two distinct human scores"
        )
    audit.record(
        "run_start",
        golden_digest=golden.digest(aspect.name),
        golden_size=len(golden),
        aspect=aspect.name,
        config_digest=cfg.digest(),
        master_seed=cfg.master_seed,
        backend_id=getattr(backend, "backend_id", "unknown"),
        objective=cfg.objective.describe(),
    )

    checkpoint = Path(checkpoint_dir) / "draft_pool.json" if checkpoint_dir else None
    pool: list[Criteria] | None = None
    if resume and checkpoint is not None and checkpoint.exists():
        payload = json.loads(checkpoint.read_text(encoding="utf-8"))
        if payload.get("complete"):
            pool = [Criteria.from_dict(c) for c in payload["criteria"]]
            audit.record(
                "draft_checkpoint_loaded",
                raw_count=payload.get("raw_count", 0),
                unique_count=len(pool),
            )
    if pool is None:
        try:
            pool = draft_pool(golden, aspect, cfg, backend, audit)
        except BackendError as exc:
            if checkpoint is not None:
                partial = getattr(exc, "partial_pool", [])
                _write_checkpoint(checkpoint, partial, complete=False, raw_count=len(partial))
                audit.record("draft_aborted", partial_count=len(partial))
            raise
        if checkpoint is not None:
            _write_checkpoint(
                checkpoint, pool, complete=True, raw_count=audit.count("draft_raw")
            )
    if not pool:
        raise DataError("drafting produced no usable criteria")

    scored = score_pool(pool, golden, aspect, cfg, backend, audit)
    top = select_top_k(scored, cfg.pool_size, cfg.objective)
    if not top:
        raise DataError(
            "no valid candidate achieved a defined objective; "
            "the golden set may be too small or exclusions too frequent"
        )
    best_draft = cfg.objective.value(top[0].report)
    assert best_draft is not None
    audit.record(
        "top_k_selected",
        ids=[c.criteria.id for c in top],
        best_objective=best_draft,
    )

    refined = refine_pool(top, golden, aspect, cfg, backend, audit)
    scored_by_id = {c.criteria.id: c for c in scored}
    to_score = [c for c in refined if c.id not in scored_by_id]
    refined_scored = score_pool(to_score, golden, aspect, cfg, backend, audit)
    # A refined text may coincide with an already-scored draft outside the
    # top pool; it re-enters the union with its existing record.
    reentered = [scored_by_id[c.id] for c in refined if c.id in scored_by_id]

    union: list[CandidateRecord] = list(top)
    union_ids = {c.criteria.id for c in union}
    for candidate in refined_scored + reentered:
        if candidate.criteria.id not in union_ids:
            union_ids.add(candidate.criteria.id)
            union.append(candidate)
    finalists = select_top_k(union, 1, cfg.objective)
    if not finalists:
        raise DataError("every refined candidate was invalid or undefined")
    final = finalists[0]
    final_value = cfg.objective.value(final.report)
    audit.record(
        "final_selected",
        criteria_id=final.criteria.id,
        provenance=final.criteria.provenance,
        parent_id=final.criteria.parent_id,
        objective=final_value,
        best_draft_objective=best_draft,
    )
    ranked = rank_candidates(scored + refined_scored, cfg.objective)
    audit.record(
        "run_end",
        draft_raw=audit.count("draft_raw"),
        refine_raw=audit.count("refine_raw"),
        candidates_scored=len(ranked),
        final_criteria_id=final.criteria.id,
    )
    return CalibrationResult(
        final=final,
        ranked=tuple(ranked),
        top=tuple(top),
        best_draft_objective=best_draft,
        audit=audit,
    )


def _write_checkpoint(
    path: Path, pool: list[Criteria], *, complete: bool, raw_count: int
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "complete": complete,
        "raw_count": raw_count,
        "criteria": [c.to_dict() for c in pool],
    }
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
