"""Prompt assembly from fixture templates, plus score parsing."""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..corpus import Aspect, GoldenLabel, GoldenSet, Sample
from ..errors import TemplateError, UnparseableScoreError

__all__ = [
    "FAMILIES",
    "TASK_KINDS",
    "TemplateSpec",
    "ExemplarSet",
    "MisalignedExample",
    "MisalignmentSet",
    "load_template",
    "render_drafting_prompt",
    "render_evaluation_prompt",
    "render_refinement_prompt",
    "parse_score",
    "sample_exemplars",
    "serialize_sample",
    "format_number",
    "RETRY_SUFFIX",
]

FAMILIES = ("drafting", "evaluation", "refinement")
TASK_KINDS = ("summarization", "data_to_text", "hallucination")

# Field captions for the two halves of a sample, per task kind.
_SAMPLE_LABELS = {
    "summarization": ("Article", "Summary"),
    "data_to_text": ("Data Expression", "Generated Sentence"),
    "hallucination": ("Article", "Summary"),
}

_LEGAL_PLACEHOLDERS = {
    "drafting": frozenset({"aspect", "exemplars", "scale_min", "scale_max"}),
    "evaluation": frozenset({"aspect", "criteria", "sample", "scale_min", "scale_max"}),
    "refinement": frozenset(
        {"aspect", "old_criteria", "misaligned_examples", "scale_min", "scale_max"}
    ),
}

_PLACEHOLDER = re.compile(r"\{\{([a-z_]+)\}\}")
_ANY_MARKER = re.compile(r"\{\{[#/a-z_]+\}\}")
_IF_CRITERIA = re.compile(r"\{\{#if_criteria\}\}(.*?)\{\{/if_criteria\}\}", re.DOTALL)

# Appended verbatim when a completion yields no parseable score.
RETRY_SUFFIX = "\nReturn only the numeric score."


@dataclass(frozen=True)
class TemplateSpec:
    """One prompt template: a family, a task kind, and the literal body.

    Bodies come from fixture files and use double-braced placeholders; the
    legal placeholder names depend on the family. Evaluation bodies may wrap
    their criteria section in ``{{#if_criteria}}...{{/if_criteria}}`` so the
    entire block drops out when no criteria are supplied.
    """

    family: str
    task_kind: str
    body: str

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise TemplateError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.task_kind not in TASK_KINDS:
            raise TemplateError(
                f"task_kind must be one of {TASK_KINDS}, got {self.task_kind!r}"
            )
        if not self.body:
            raise TemplateError("template body must be non-empty")
        legal = _LEGAL_PLACEHOLDERS[self.family]
        names = set(_PLACEHOLDER.findall(self.body))
        illegal = sorted(names - legal)
        if illegal:
            raise TemplateError(
                f"{self.family}/{self.task_kind} template uses illegal placeholders: "
                f"{', '.join(illegal)}"
            )
        opens = self.body.count("{{#if_criteria}}")
        closes = self.body.count("{{/if_criteria}}")
        if opens != closes:
            raise TemplateError("unbalanced {{#if_criteria}} section")
        if opens and self.family != "evaluation":
            raise TemplateError("criteria sections are only legal in evaluation templates")


@dataclass(frozen=True)
class ExemplarSet:
    """A seeded draw of labeled samples used as in-context examples."""

    items: tuple[tuple[Sample, GoldenLabel], ...]
    draw_seed: int
    draw_size: int

    def __post_init__(self) -> None:
        if len(self.items) != self.draw_size:
            raise ValueError(
                f"exemplar set holds {len(self.items)} items but declares {self.draw_size}"
            )
        ids = [sample.id for sample, _ in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("exemplar samples must be distinct")


@dataclass(frozen=True)
class MisalignedExample:
    """A sample where the machine score drifted from the human score."""

    sample: Sample
    human_score: float
    llm_score: float

    def __post_init__(self) -> None:
        if self.human_score == self.llm_score:
            raise ValueError(
                f"sample {self.sample.id!r}: scores agree, nothing is misaligned"
            )


@dataclass(frozen=True)
class MisalignmentSet:
    """Misaligned examples gathered under one criteria."""

    items: tuple[MisalignedExample, ...]
    criteria_id: str

    def __len__(self) -> int:
        return len(self.items)


def format_number(value: float) -> str:
    """Render scores and scale bounds without a spurious decimal point."""
    if value == int(value):
        return str(int(value))
    return f"{value:g}"


def load_template(
    family: str, task_kind: str, directory: str | Path | None = None
) -> TemplateSpec:
    """Load the fixture template for one (family, task_kind).

    Templates ship inside the package; ``directory`` overrides the location
    for alternate fixture sets. A single trailing newline is stripped so
    file hygiene does not leak into prompt bytes.
    """
    name = f"{family}_{task_kind}.txt"
    if directory is not None:
        path = Path(directory) / name
        if not path.exists():
            raise TemplateError(f"no template file {path}")
        raw = path.read_text(encoding="utf-8")
    else:
        ref = resources.files("judgecal.prompts").joinpath("templates", name)
        try:
            raw = ref.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise TemplateError(f"no packaged template for {family}/{task_kind}") from None
    return TemplateSpec(family=family, task_kind=task_kind, body=raw.removesuffix("\n"))


def serialize_sample(sample: Sample, task_kind: str) -> str:
    if task_kind not in _SAMPLE_LABELS:
        raise TemplateError(f"unknown task kind {task_kind!r}")
    source_label, target_label = _SAMPLE_LABELS[task_kind]
    return (
        f"{source_label}:\n{sample.source}\n\n{target_label}:\n{sample.target}"
    )


def _serialize_exemplars(exemplars: ExemplarSet, aspect: Aspect, task_kind: str) -> str:
    blocks = []
    for i, (sample, label) in enumerate(exemplars.items, start=1):
        blocks.append(
            f"### Example {i}\n\n"
            f"{serialize_sample(sample, task_kind)}\n\n"
            f"{aspect.name} Score: {format_number(label.score)}"
        )
    return "\n\n".join(blocks)


def _serialize_misaligned(misaligned: MisalignmentSet, task_kind: str) -> str:
    blocks = []
    for i, item in enumerate(misaligned.items, start=1):
        blocks.append(
            f"### Example {i}\n\n"
            f"{serialize_sample(item.sample, task_kind)}\n\n"
            f"Human Expert Score: {format_number(item.human_score)}\n"
            f"LLM Score: {format_number(item.llm_score)}"
        )
    return "\n\n".join(blocks)


def _render(spec: TemplateSpec, bindings: dict[str, str], keep_criteria: bool) -> str:
    body = _IF_CRITERIA.sub(lambda m: m.group(1) if keep_criteria else "", spec.body)
    for name, value in bindings.items():
        body = body.replace("{{" + name + "}}", value)
    leftover = sorted(set(_ANY_MARKER.findall(body)))
    if leftover:
        raise TemplateError(
            f"{spec.family}/{spec.task_kind}: unbound markers after rendering: "
            f"{', '.join(leftover)}"
        )
    return body


def _scale_bindings(aspect: Aspect) -> dict[str, str]:
    return {
        "aspect": aspect.name,
        "scale_min": format_number(aspect.scale_min),
        "scale_max": format_number(aspect.scale_max),
    }


def render_drafting_prompt(
    spec: TemplateSpec, aspect: Aspect, exemplars: ExemplarSet
) -> str:
    """Build the prompt that asks the model to induce scoring criteria."""
    if spec.family != "drafting":
        raise TemplateError(f"expected a drafting template, got {spec.family!r}")
    if not exemplars.items:
        raise TemplateError("drafting needs at least one exemplar")
    for _, label in exemplars.items:
        if label.aspect != aspect.name:
            raise TemplateError(
                f"exemplar labeled for {label.aspect!r}, prompt is for {aspect.name!r}"
            )
    bindings = _scale_bindings(aspect)
    bindings["exemplars"] = _serialize_exemplars(exemplars, aspect, spec.task_kind)
    return _render(spec, bindings, keep_criteria=False)


def render_evaluation_prompt(
    spec: TemplateSpec,
    aspect: Aspect,
    criteria_text: str | None,
    sample: Sample,
) -> str:
    """Build the scoring prompt for one sample.

    With ``criteria_text=None`` the criteria section (header and body) is
    omitted entirely and every other byte stays identical, which is what
    makes criteria-ablation comparisons meaningful.
    """
    if spec.family != "evaluation":
        raise TemplateError(f"expected an evaluation template, got {spec.family!r}")
    if criteria_text is not None and not criteria_text.strip():
        raise TemplateError("criteria text must be non-empty when provided")
    bindings = _scale_bindings(aspect)
    bindings["sample"] = serialize_sample(sample, spec.task_kind)
    if criteria_text is not None:
        bindings["criteria"] = criteria_text
    return _render(spec, bindings, keep_criteria=criteria_text is not None)


def render_refinement_prompt(
    spec: TemplateSpec,
    aspect: Aspect,
    old_criteria_text: str,
    misaligned: MisalignmentSet,
) -> str:
    """Build the prompt that rewrites criteria against misaligned examples."""
    if spec.family != "refinement":
        raise TemplateError(f"expected a refinement template, got {spec.family!r}")
    if not old_criteria_text.strip():
        raise TemplateError("refinement needs the old criteria text")
    if not misaligned.items:
        raise TemplateError("refinement needs at least one misaligned example")
    bindings = _scale_bindings(aspect)
    bindings["old_criteria"] = old_criteria_text
    bindings["misaligned_examples"] = _serialize_misaligned(misaligned, spec.task_kind)
    return _render(spec, bindings, keep_criteria=False)


_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")


def parse_score(raw: str, aspect: Aspect) -> float:
    """Extract the first numeric token that lands on the aspect's grid.

    Each candidate token is snapped to the nearest legal grid value; a token
    farther than half a step from the grid (or outside the bounds) is
    skipped. When nothing qualifies the completion is unparseable.
    """
    for match in _NUMBER.finditer(raw):
        value = float(match.group())
        snapped = aspect.snap(value)
        if abs(value - snapped) < aspect.scale_step / 2:
            return snapped
    raise UnparseableScoreError(
        f"no in-range score for {aspect.name!r} in completion: {raw[:120]!r}", raw=raw
    )


def sample_exemplars(
    golden: GoldenSet, size: int, seed: int, aspect: str | None = None
) -> ExemplarSet:
    """Draw ``size`` distinct exemplars, determined by (set order, size, seed)."""
    pairs = golden.ordered_pairs(aspect)
    if size < 1:
        raise ValueError(f"exemplar draw size must be positive, got {size}")
    if size > len(pairs):
        raise ValueError(
            f"requested {size} exemplars but the golden set holds {len(pairs)}"
        )
    rng = random.Random(seed)
    items = tuple(rng.sample(pairs, size))
    return ExemplarSet(items=items, draw_seed=seed, draw_size=size)
