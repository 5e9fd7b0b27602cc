"""Deterministic offline backend with a planted notion of criteria quality.

The mock assigns each golden sample a latent true score (its human label)
and answers evaluation prompts with that score plus noise. The noise level
shrinks as the prompt mentions more of the world's planted quality keys, and
vanishes entirely when every key is present, so better criteria measurably
correlate better. Every completion is a pure function of (prompt,
temperature, n_samples, seed), which makes whole pipelines replayable.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..corpus import Aspect, GoldenSet, Sample
from ..seeding import derive_seed, text_digest
from .base import BackendConfig, GenerationRequest, GenerationResponse
from .cache import ResponseCache, serve_with_cache

__all__ = [
    "DEFAULT_QUALITY_KEYS",
    "PlantedWorld",
    "MockBackend",
    "mock_score_function",
    "planted_criteria_text",
]

DEFAULT_QUALITY_KEYS = (
    "tight topical focus",
    "faithful coverage of the source",
    "orderly progression of points",
    "economical wording",
)

# Cues that identify the prompt family. They live in the package's own
# templates, so the mock stays in lockstep with the renderer by contract.
_DRAFT_CUE = "## Induced Criteria"
_REFINE_CUE = "Old criteria:"
_SCORE_CUES = ("Please first return your score", "Is the sentence supported by the article?")


@dataclass(frozen=True)
class PlantedWorld:
    """Ground truth the mock scores against.

    ``quality_keys`` is the full set of score-relevant phrases. Drafted
    criteria may only surface ``draftable_keys`` (defaults to all of them);
    the remainder can still be injected during refinement, which lets tests
    stage worlds where refinement has genuine headroom.
    """

    aspect: Aspect
    samples: tuple[Sample, ...]
    true_scores: dict[str, float]
    quality_keys: tuple[str, ...] = DEFAULT_QUALITY_KEYS
    draftable_keys: tuple[str, ...] | None = None
    seed: int = 0
    noise_scale: float = 1.0
    draft_key_base: float = 0.35
    draft_key_per_exemplar: float = 0.05
    refine_key_add_prob: float = 0.5

    def __post_init__(self) -> None:
        if not self.quality_keys:
            raise ValueError("a planted world needs at least one quality key")
        if len(set(self.quality_keys)) != len(self.quality_keys):
            raise ValueError("quality keys must be distinct")
        if self.draftable_keys is not None:
            stray = set(self.draftable_keys) - set(self.quality_keys)
            if stray:
                raise ValueError(f"draftable keys not in quality_keys: {sorted(stray)}")
        for sample in self.samples:
            if sample.id not in self.true_scores:
                raise ValueError(f"sample {sample.id!r} has no planted true score")

    @classmethod
    def from_golden(
        cls,
        golden: GoldenSet,
        aspect: Aspect,
        *,
        quality_keys: tuple[str, ...] = DEFAULT_QUALITY_KEYS,
        seed: int = 0,
        **kwargs,
    ) -> "PlantedWorld":
        pairs = golden.ordered_pairs(aspect.name)
        return cls(
            aspect=aspect,
            samples=tuple(s for s, _ in pairs),
            true_scores={s.id: label.score for s, label in pairs},
            quality_keys=quality_keys,
            seed=seed,
            **kwargs,
        )

    @property
    def draft_keys(self) -> tuple[str, ...]:
        return self.quality_keys if self.draftable_keys is None else self.draftable_keys

    def matched_keys(self, text: str) -> int:
        return sum(1 for key in self.quality_keys if key in text)

    def planted_score(self, matched: int, sample_id: str) -> float:
        """Latent score for a sample under criteria matching ``matched`` keys."""
        true = self.true_scores[sample_id]
        total = len(self.quality_keys)
        if matched >= total:
            return true
        span = self.aspect.scale_max - self.aspect.scale_min
        sigma = self.noise_scale * (total - matched) / total * (span / 2)
        rng = random.Random(derive_seed(self.seed, "score", matched, sample_id))
        return self.aspect.snap(true + rng.gauss(0, sigma))


def mock_score_function(criteria_text: str, sample: Sample, planted: PlantedWorld) -> float:
    """The score the mock gives ``sample`` when judged under ``criteria_text``.

    Pure in all arguments; when the criteria text contains every planted
    quality key the result equals the sample's human label exactly.
    """
    return planted.planted_score(planted.matched_keys(criteria_text), sample.id)


def planted_criteria_text(keys: tuple[str, ...] | list[str]) -> str:
    """Canonical criteria wording for a set of matched keys.

    Identical key subsets yield identical text, so independently drawn
    duplicates collapse in the dedup stage exactly like a real model
    restating the same rubric.
    """
    if not keys:
        return (
            "Score by overall impression of quality, judged holistically "
            "against the source."
        )
    listing = "; ".join(keys)
    return (
        f"Award the top score only when every quality holds: {listing}. "
        "Deduct proportionally for each missing quality, giving the bottom "
        "score when none hold."
    )


class MockBackend:
    """Offline stand-in that honors the full Backend contract."""

    def __init__(self, config: BackendConfig, world: PlantedWorld) -> None:
        if config.kind != "mock":
            raise ValueError(f"MockBackend requires kind='mock', got {config.kind!r}")
        self.config = config
        self.world = world
        self.backend_id = f"mock/{config.model_name}"
        self._cache = ResponseCache(config.cache_dir) if config.cache_dir else None
        self._samples_by_length = sorted(
            world.samples, key=lambda s: len(s.target), reverse=True
        )

    @property
    def max_concurrency(self) -> int:
        return self.config.max_concurrency

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        def produce(n: int) -> list[str]:
            return [self._complete(request, i) for i in range(n)]

        return serve_with_cache(
            self._cache, self.config.model_name, request, self.backend_id, produce
        )

    def _complete(self, request: GenerationRequest, index: int) -> str:
        prompt = request.prompt
        if _DRAFT_CUE in prompt:
            return self._draft(prompt, index)
        if _REFINE_CUE in prompt:
            return self._refine(prompt, index)
        if any(cue in prompt for cue in _SCORE_CUES):
            return self._score(prompt)
        digest = text_digest(prompt)
        return f"mock-completion {digest[:12]}/{index}"

    def _draft(self, prompt: str, index: int) -> str:
        world = self.world
        rng = random.Random(
            derive_seed(self.config.seed, "draft", text_digest(prompt), index)
        )
        shots = prompt.count("### Example")
        p = min(0.95, world.draft_key_base + world.draft_key_per_exemplar * shots)
        chosen = [key for key in world.draft_keys if rng.random() < p]
        return planted_criteria_text(chosen)

    def _refine(self, prompt: str, index: int) -> str:
        world = self.world
        rng = random.Random(
            derive_seed(self.config.seed, "refine", text_digest(prompt), index)
        )
        kept = {key for key in world.quality_keys if key in prompt}
        added = {
            key
            for key in world.quality_keys
            if key not in kept and rng.random() < world.refine_key_add_prob
        }
        merged = [key for key in world.quality_keys if key in kept | added]
        return planted_criteria_text(merged)

    def _score(self, prompt: str) -> str:
        world = self.world
        matched = world.matched_keys(prompt)
        sample = self._locate_sample(prompt)
        if sample is not None:
            score = world.planted_score(matched, sample.id)
        else:
            # Unknown sample text: stay deterministic, answer mid-scale noise.
            rng = random.Random(
                derive_seed(self.config.seed, "score-unknown", matched, text_digest(prompt))
            )
            mid = (world.aspect.scale_min + world.aspect.scale_max) / 2
            score = world.aspect.snap(mid + rng.gauss(0, world.aspect.scale_step))
        return f"{_format_score(score)}\nReasoning: verdict follows the planted rubric."

    def _locate_sample(self, prompt: str) -> Sample | None:
        for sample in self._samples_by_length:
            if sample.target in prompt:
                return sample
        return None


def _format_score(score: float) -> str:
    if score == int(score):
        return str(int(score))
    return f"{score:g}"
