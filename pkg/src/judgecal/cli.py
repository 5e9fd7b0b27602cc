"""Command-line entry points."""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .calibrate import (
    AuditLog,
    CalibrationConfig,
    calibrate,
    draft_pool,
    score_records,
)
from .corpus import Aspect, GoldenSet, ingest_golden_set, load_aspect_manifest
from .errors import ConfigError, DataError, JudgecalError
from .llm import (
    Backend,
    BackendConfig,
    HttpBackend,
    MockBackend,
    PlantedWorld,
)
from .metrics import LEVELS, meta_eval_dataset_level, meta_eval_sample_level
from .records import NO_CRITERIA_ID
from .runio import (
    prepare_out_dir,
    read_criteria_file,
    read_records,
    render_correlation_text,
    render_report_text,
    report_payload,
    write_records,
    write_run_dir,
)

_BACKEND_FIELDS = {
    "endpoint",
    "model_name",
    "request_timeout",
    "max_retries",
    "max_concurrency",
    "cache_dir",
    "seed",
    "api_key_env",
    "retry_backoff",
}
_CONFIG_KEYS = {"task", "aspects", "backend", "calibration"}


def _cli_errors(fn):
    """Map package errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except JudgecalError as exc:
            click.echo(f"error ({exc.category}): {exc}", err=True)
            sys.exit(exc.exit_code)
        except click.ClickException:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            click.echo(f"internal error: {exc!r}", err=True)
            sys.exit(5)

    return wrapper


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    source = Path(path)
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {source}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{source}: config must be a JSON object")
    unknown = set(payload) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(
            f"{source}: unknown config keys: {', '.join(sorted(unknown))}"
        )
    if "aspects" in payload and not isinstance(payload["aspects"], str):
        raise ConfigError(f"{source}: 'aspects' must be a path string")
    if "aspects" in payload:
        payload["aspects"] = str((source.parent / payload["aspects"]).resolve())
    return payload


def _resolve_aspect(
    aspects_path: str | None, aspect_name: str | None, config: dict
) -> Aspect:
    path = aspects_path or config.get("aspects")
    if path is None:
        raise ConfigError("no aspect manifest given; pass --aspects or set it in --config")
    manifest = load_aspect_manifest(path)
    if aspect_name is None:
        if len(manifest) == 1:
            return next(iter(manifest.values()))
        raise ConfigError(
            f"{path} defines {len(manifest)} aspects; pick one with --aspect "
            f"({', '.join(sorted(manifest))})"
        )
    if aspect_name not in manifest:
        raise ConfigError(
            f"aspect {aspect_name!r} not in {path} ({', '.join(sorted(manifest))})"
        )
    return manifest[aspect_name]


def _build_calibration(
    config: dict, seed: int | None, objective: str | None
) -> CalibrationConfig:
    payload = dict(config.get("calibration", {}))
    payload.setdefault("task_kind", config.get("task", "summarization"))
    if seed is not None:
        payload["master_seed"] = seed
    if objective is not None:
        coefficient, _, level = objective.partition("@")
        payload["objective"] = {
            "coefficient": coefficient.strip(),
            "level": (level or "dataset").strip(),
        }
    try:
        return CalibrationConfig.from_dict(payload)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build_backend(
    kind: str | None,
    config: dict,
    golden: GoldenSet,
    aspect: Aspect,
    cache_dir: Path | None,
    seed: int | None,
) -> Backend:
    payload = dict(config.get("backend", {}))
    kind = kind or payload.pop("kind", "mock")
    payload.pop("kind", None)
    unknown = set(payload) - _BACKEND_FIELDS
    if unknown:
        raise ConfigError(f"unknown backend fields: {', '.join(sorted(unknown))}")
    if seed is not None:
        payload.setdefault("seed", seed)
    if cache_dir is not None:
        payload.setdefault("cache_dir", str(cache_dir))
    try:
        backend_config = BackendConfig(kind=kind, **payload)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if kind == "mock":
        world = PlantedWorld.from_golden(golden, aspect, seed=backend_config.seed)
        return MockBackend(backend_config, world)
    return HttpBackend(backend_config)


@click.group()
@click.version_option(package_name="judgecal")
def main() -> None:
    """Calibrate natural-language scoring criteria against expert labels."""


@main.command("calibrate")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON run config (task, aspects, backend, calibration).")
@click.option("--golden", "golden_path", type=click.Path(), required=True,
              help="Golden set as JSON lines.")
@click.option("--aspects", "aspects_path", type=click.Path(), default=None,
              help="Aspect manifest (overrides the config file).")
@click.option("--aspect", "aspect_name", default=None,
              help="Aspect name when the manifest defines several.")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Run directory to write.")
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]),
              default=None, help="Backend kind (overrides the config file).")
@click.option("--objective", default=None, metavar="COEFF[@LEVEL]",
              help="Selection objective, e.g. spearman@dataset or kendall@sample.")
@click.option("--seed", type=int, default=None, help="Master seed override.")
@click.option("--resume", is_flag=True, help="Reuse checkpoints and cache in --out.")
@click.option("--force", is_flag=True, help="Allow writing into a non-empty --out.")
@_cli_errors
def cmd_calibrate(
    config_path: str | None,
    golden_path: str,
    aspects_path: str | None,
    aspect_name: str | None,
    out_path: str,
    backend_kind: str | None,
    objective: str | None,
    seed: int | None,
    resume: bool,
    force: bool,
) -> None:
    """Draft, rank, and refine criteria; write a full run directory."""
    config = _load_config_file(config_path)
    aspect = _resolve_aspect(aspects_path, aspect_name, config)
    golden = ingest_golden_set(golden_path, aspect)
    cfg = _build_calibration(config, seed, objective)
    out = prepare_out_dir(out_path, force=force or resume)
    backend = _build_backend(backend_kind, config, golden, aspect, out / "cache", seed)
    result = calibrate(
        golden,
        aspect,
        cfg,
        backend,
        checkpoint_dir=out / "checkpoints",
        resume=resume,
    )
    write_run_dir(out, result, cfg, golden, aspect, backend.backend_id)
    click.echo(render_report_text(report_payload(result, cfg, golden, aspect)), nl=False)
    click.echo(f"run written to {out}")


@main.command("draft")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--golden", "golden_path", type=click.Path(), required=True)
@click.option("--aspects", "aspects_path", type=click.Path(), default=None)
@click.option("--aspect", "aspect_name", default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]),
              default=None)
@click.option("--seed", type=int, default=None)
@click.option("--force", is_flag=True)
@_cli_errors
def cmd_draft(
    config_path: str | None,
    golden_path: str,
    aspects_path: str | None,
    aspect_name: str | None,
    out_path: str,
    backend_kind: str | None,
    seed: int | None,
    force: bool,
) -> None:
    """Draft a candidate pool without scoring or refining it."""
    config = _load_config_file(config_path)
    aspect = _resolve_aspect(aspects_path, aspect_name, config)
    golden = ingest_golden_set(golden_path, aspect)
    cfg = _build_calibration(config, seed, None)
    out = prepare_out_dir(out_path, force=force)
    backend = _build_backend(backend_kind, config, golden, aspect, out / "cache", seed)
    audit = AuditLog()
    pool = draft_pool(golden, aspect, cfg, backend, audit)
    (out / "pool.json").write_text(
        json.dumps([c.to_dict() for c in pool], indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    audit.write(out / "audit.jsonl")
    click.echo(
        f"drafted {audit.count('draft_raw')} completions, "
        f"{len(pool)} unique criteria -> {out / 'pool.json'}"
    )


@main.command("evaluate")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--golden", "golden_path", type=click.Path(), required=True)
@click.option("--aspects", "aspects_path", type=click.Path(), default=None)
@click.option("--aspect", "aspect_name", default=None)
@click.option("--criteria", "criteria_path", type=click.Path(), default=None,
              help="Criteria file produced by calibrate (or hand-written).")
@click.option("--no-criteria", "no_criteria", is_flag=True,
              help="Score with the criteria block omitted entirely.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]),
              default=None)
@click.option("--level", type=click.Choice(list(LEVELS)), default="dataset")
@click.option("--seed", type=int, default=None)
@click.option("--force", is_flag=True)
@_cli_errors
def cmd_evaluate(
    config_path: str | None,
    golden_path: str,
    aspects_path: str | None,
    aspect_name: str | None,
    criteria_path: str | None,
    no_criteria: bool,
    out_path: str,
    backend_kind: str | None,
    level: str,
    seed: int | None,
    force: bool,
) -> None:
    """Score every golden sample under one criteria text (or none)."""
    if no_criteria == (criteria_path is not None):
        raise ConfigError("pass exactly one of --criteria or --no-criteria")
    config = _load_config_file(config_path)
    aspect = _resolve_aspect(aspects_path, aspect_name, config)
    golden = ingest_golden_set(golden_path, aspect)
    cfg = _build_calibration(config, seed, None)
    out = prepare_out_dir(out_path, force=force)
    backend = _build_backend(backend_kind, config, golden, aspect, out / "cache", seed)
    if no_criteria:
        criteria_text, ident = None, NO_CRITERIA_ID
    else:
        criteria = read_criteria_file(criteria_path)
        criteria_text, ident = criteria.text, criteria.id
    records = score_records(
        golden, aspect, cfg, backend, criteria_text, ident
    )
    write_records(out / "records.jsonl", records)
    if level == "sample":
        report = meta_eval_sample_level(golden, records, aspect.name)
    else:
        report = meta_eval_dataset_level(golden, records, aspect.name)
    (out / "correlation.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    text = render_correlation_text(report, label=f"criteria: {ident}")
    (out / "correlation.txt").write_text(text, encoding="utf-8")
    excluded = sum(1 for r in records if r.excluded)
    click.echo(text, nl=False)
    click.echo(f"records: {len(records)} ({excluded} excluded) -> {out / 'records.jsonl'}")


@main.command("meta-eval")
@click.option("--golden", "golden_path", type=click.Path(), required=True)
@click.option("--aspects", "aspects_path", type=click.Path(), default=None)
@click.option("--aspect", "aspect_name", default=None)
@click.option("--predictions", "predictions_path", type=click.Path(), required=True,
              help="Evaluation records as JSON lines.")
@click.option("--level", type=click.Choice(list(LEVELS)), default="dataset")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON.")
@_cli_errors
def cmd_meta_eval(
    golden_path: str,
    aspects_path: str | None,
    aspect_name: str | None,
    predictions_path: str,
    level: str,
    as_json: bool,
) -> None:
    """Correlate stored predictions against the golden labels."""
    aspect = _resolve_aspect(aspects_path, aspect_name, {})
    golden = ingest_golden_set(golden_path, aspect)
    records = read_records(predictions_path)
    if level == "sample":
        report = meta_eval_sample_level(golden, records, aspect.name)
    else:
        report = meta_eval_dataset_level(golden, records, aspect.name)
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(render_correlation_text(report), nl=False)


@main.command("report")
@click.argument("run_dir", type=click.Path())
@_cli_errors
def cmd_report(run_dir: str) -> None:
    """Re-render the human-readable report of a finished run."""
    path = Path(run_dir) / "report.json"
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"no report.json under {run_dir}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from None
    click.echo(render_report_text(payload), nl=False)


if __name__ == "__main__":
    main()
