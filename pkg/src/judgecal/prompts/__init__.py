"""Prompt templates, rendering, and score parsing."""
from .rendering import (
    FAMILIES,
    RETRY_SUFFIX,
    TASK_KINDS,
    ExemplarSet,
    MisalignedExample,
    MisalignmentSet,
    TemplateSpec,
    format_number,
    load_template,
    parse_score,
    render_drafting_prompt,
    render_evaluation_prompt,
    render_refinement_prompt,
    sample_exemplars,
    serialize_sample,
)

__all__ = [
    "FAMILIES",
    "TASK_KINDS",
    "RETRY_SUFFIX",
    "TemplateSpec",
    "ExemplarSet",
    "MisalignedExample",
    "MisalignmentSet",
    "format_number",
    "load_template",
    "parse_score",
    "render_drafting_prompt",
    "render_evaluation_prompt",
    "render_refinement_prompt",
    "sample_exemplars",
    "serialize_sample",
]
