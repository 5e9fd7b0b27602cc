"""Reading and writing the files a calibration run leaves behind."""
from __future__ import annotations

import json
from pathlib import Path

from .calibrate import CalibrationConfig, CalibrationResult, CandidateRecord, Criteria
from .corpus import Aspect, GoldenSet
from .errors import ConfigError, DataError
from .metrics import CorrelationReport, Objective
from .records import EvaluationRecord

__all__ = [
    "prepare_out_dir",
    "write_run_dir",
    "write_records",
    "read_records",
    "write_criteria_file",
    "read_criteria_file",
    "report_payload",
    "render_report_text",
    "render_correlation_text",
]


def prepare_out_dir(path: str | Path, force: bool = False) -> Path:
    """Create the output directory, refusing to clobber existing results."""
    out = Path(path)
    if out.exists():
        if not out.is_dir():
            raise ConfigError(f"output path {out} exists and is not a directory")
        if any(out.iterdir()) and not force:
            raise ConfigError(
                f"output directory {out} is not empty; pass --force to overwrite"
            )
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_criteria_file(path: str | Path, criteria: Criteria) -> None:
    Path(path).write_text(
        json.dumps(criteria.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def read_criteria_file(path: str | Path) -> Criteria:
    source = Path(path)
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"criteria file not found: {source}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{source}: not valid JSON: {exc}") from None
    if isinstance(payload, str):
        # A bare string is accepted as criteria text for hand-written files.
        try:
            return Criteria(text=payload, provenance="drafted")
        except ValueError as exc:
            raise DataError(f"{source}: {exc}") from None
    if not isinstance(payload, dict):
        raise DataError(f"{source}: expected a JSON object with a 'text' field")
    if "text" not in payload:
        raise DataError(f"{source}: missing required field 'text'")
    try:
        return Criteria.from_dict(payload)
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{source}: {exc}") from None


def write_records(path: str | Path, records: tuple[EvaluationRecord, ...]) -> None:
    lines = [
        json.dumps(r.to_dict(), sort_keys=True, ensure_ascii=False) for r in records
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_records(path: str | Path) -> tuple[EvaluationRecord, ...]:
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"records file not found: {source}") from None
    records: list[EvaluationRecord] = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{source}: line {number}: not valid JSON: {exc}") from None
        try:
            records.append(EvaluationRecord.from_dict(payload))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{source}: line {number}: {exc}") from None
    return tuple(records)


def _candidate_row(
    candidate: CandidateRecord,
    objective: Objective,
    top_ids: set[str],
    final_id: str | None,
) -> dict:
    value = objective.value(candidate.report)
    return {
        "id": candidate.criteria.id,
        "provenance": candidate.criteria.provenance,
        "parent_id": candidate.criteria.parent_id,
        "objective": value,
        "pearson": candidate.report.pearson_r,
        "spearman": candidate.report.spearman_rho,
        "kendall": candidate.report.kendall_tau,
        "n_groups_total": candidate.report.n_groups_total,
        "n_groups_defined": candidate.report.n_groups_defined,
        "errors": candidate.errors,
        "valid": candidate.valid,
        "selected": candidate.criteria.id in top_ids,
        "final": candidate.criteria.id == final_id,
    }


def report_payload(
    result: CalibrationResult,
    cfg: CalibrationConfig,
    golden: GoldenSet,
    aspect: Aspect,
) -> dict:
    top_ids = {c.criteria.id for c in result.top}
    final_id = result.final.criteria.id
    return {
        "aspect": aspect.name,
        "golden": {
            "name": golden.name,
            "size": len(golden),
            "digest": golden.digest(aspect.name),
        },
        "objective": cfg.objective.describe(),
        "final": {
            "criteria_id": final_id,
            "provenance": result.final.criteria.provenance,
            "parent_id": result.final.criteria.parent_id,
            "objective": cfg.objective.value(result.final.report),
            "best_draft_objective": result.best_draft_objective,
        },
        "candidates": [
            _candidate_row(c, cfg.objective, top_ids, final_id) for c in result.ranked
        ],
    }


def _fmt(value: float | None) -> str:
    return "undefined" if value is None else f"{value:+.4f}"


def render_report_text(payload: dict) -> str:
    """A fixed-width table of every candidate, best first."""
    lines = [
        "calibration report",
        f"aspect: {payload['aspect']}",
        "golden set: {name} ({size} samples, digest {digest})".format(
            **payload["golden"]
        ),
        f"objective: {payload['objective']}",
        "final criteria: {criteria_id} ({provenance}) objective {obj}".format(
            criteria_id=payload["final"]["criteria_id"],
            provenance=payload["final"]["provenance"],
            obj=_fmt(payload["final"]["objective"]),
        ),
        f"best drafted objective: {_fmt(payload['final']['best_draft_objective'])}",
        "",
    ]
    header = (
        f"{'criteria':<18}{'origin':<9}{'objective':>10}{'pearson':>10}"
        f"{'spearman':>10}{'kendall':>10}{'errors':>8}{'valid':>7}  flags"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for row in payload["candidates"]:
        flags = []
        if row["final"]:
            flags.append("final")
        if row["selected"]:
            flags.append("top-k")
        lines.append(
            f"{row['id']:<18}{row['provenance']:<9}{_fmt(row['objective']):>10}"
            f"{_fmt(row['pearson']):>10}{_fmt(row['spearman']):>10}"
            f"{_fmt(row['kendall']):>10}{row['errors']:>8}"
            f"{str(row['valid']).lower():>7}  {','.join(flags)}"
        )
    return "\n".join(lines) + "\n"


def render_correlation_text(report: CorrelationReport, label: str = "correlation") -> str:
    lines = [
        label,
        f"level: {report.level}",
        f"pearson:  {_fmt(report.pearson_r)}",
        f"spearman: {_fmt(report.spearman_rho)}",
        f"kendall:  {_fmt(report.kendall_tau)}",
        f"groups: {report.n_groups_defined} defined of {report.n_groups_total}",
    ]
    return "\n".join(lines) + "\n"


def write_run_dir(
    out: Path,
    result: CalibrationResult,
    cfg: CalibrationConfig,
    golden: GoldenSet,
    aspect: Aspect,
    backend_id: str,
) -> None:
    """Persist a finished run: config, audit, candidates, report, winner."""
    config_snapshot = {
        "aspect": {
            "name": aspect.name,
            "scale_min": aspect.scale_min,
            "scale_max": aspect.scale_max,
            "scale_step": aspect.scale_step,
        },
        "golden": {
            "name": golden.name,
            "size": len(golden),
            "digest": golden.digest(aspect.name),
        },
        "backend_id": backend_id,
        "calibration": cfg.to_dict(),
    }
    (out / "config.json").write_text(
        json.dumps(config_snapshot, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    result.audit.write(out / "audit.jsonl")
    candidates_dir = out / "candidates"
    candidates_dir.mkdir(exist_ok=True)
    for candidate in result.ranked:
        (candidates_dir / f"{candidate.criteria.id}.json").write_text(
            json.dumps(candidate.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    write_criteria_file(out / "final_criteria.json", result.final.criteria)
    payload = report_payload(result, cfg, golden, aspect)
    (out / "report.json").write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (out / "report.txt").write_text(render_report_text(payload), encoding="utf-8")
