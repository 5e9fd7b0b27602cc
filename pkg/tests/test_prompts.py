"""Template loading, prompt rendering against byte fixtures, score parsing."""
from pathlib import Path

import pytest

from judgecal import Aspect, TemplateError, UnparseableScoreError
from judgecal.prompts import (
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

import fixture_inputs as fi
from conftest import build_golden

FIXTURES = Path(__file__).parent / "fixtures" / "rendered"


def fixture_bytes(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


class TestRenderedFixtures:
    """Byte-for-byte agreement with the frozen rendered prompts."""

    @pytest.mark.parametrize("task", TASK_KINDS)
    def test_drafting(self, task):
        rendered = render_drafting_prompt(
            load_template("drafting", task), fi.ASPECTS[task], fi.exemplar_set(task)
        )
        assert rendered == fixture_bytes(f"drafting_{task}.txt")

    @pytest.mark.parametrize("task", TASK_KINDS)
    def test_evaluation_with_criteria(self, task):
        rendered = render_evaluation_prompt(
            load_template("evaluation", task),
            fi.ASPECTS[task],
            fi.CRITERIA_TEXTS[task],
            fi.EVAL_SAMPLES[task],
        )
        assert rendered == fixture_bytes(f"evaluation_{task}.txt")

    @pytest.mark.parametrize("task", TASK_KINDS)
    def test_evaluation_without_criteria(self, task):
        rendered = render_evaluation_prompt(
            load_template("evaluation", task), fi.ASPECTS[task], None, fi.EVAL_SAMPLES[task]
        )
        assert rendered == fixture_bytes(f"evaluation_{task}_no_criteria.txt")

    @pytest.mark.parametrize("task", TASK_KINDS)
    def test_refinement(self, task):
        rendered = render_refinement_prompt(
            load_template("refinement", task),
            fi.ASPECTS[task],
            fi.OLD_CRITERIA_TEXTS[task],
            fi.misalignment_set(task),
        )
        assert rendered == fixture_bytes(f"refinement_{task}.txt")

    @pytest.mark.parametrize("task", TASK_KINDS)
    def test_criteria_omission_is_a_single_contiguous_deletion(self, task):
        spec = load_template("evaluation", task)
        aspect = fi.ASPECTS[task]
        sample = fi.EVAL_SAMPLES[task]
        criteria = fi.CRITERIA_TEXTS[task]
        with_criteria = render_evaluation_prompt(spec, aspect, criteria, sample)
        without = render_evaluation_prompt(spec, aspect, None, sample)

        prefix = 0
        while (
            prefix < len(without)
            and with_criteria[prefix] == without[prefix]
        ):
            prefix += 1
        suffix = 0
        while (
            suffix < len(without) - prefix
            and with_criteria[len(with_criteria) - 1 - suffix]
            == without[len(without) - 1 - suffix]
        ):
            suffix += 1
        deleted = with_criteria[prefix : len(with_criteria) - suffix]
        # The two renderings differ by exactly one contiguous region. (Its
        # exact boundaries are ambiguous when the criteria text shares a
        # border with its context, so the content checks use membership.)
        assert without == with_criteria[:prefix] + with_criteria[len(with_criteria) - suffix :]
        assert len(deleted) == len(with_criteria) - len(without)
        assert criteria in with_criteria
        assert criteria not in without
        assert sample.target in without and sample.source in without


class TestTemplateSpec:
    def test_illegal_placeholder_rejected(self):
        with pytest.raises(TemplateError, match="illegal placeholders: criteria"):
            TemplateSpec(family="drafting", task_kind="summarization", body="{{criteria}}")

    def test_unbalanced_conditional_rejected(self):
        with pytest.raises(TemplateError, match="unbalanced"):
            TemplateSpec(
                family="evaluation",
                task_kind="summarization",
                body="{{#if_criteria}}{{criteria}}",
            )

    def test_conditional_outside_evaluation_rejected(self):
        with pytest.raises(TemplateError, match="only legal in evaluation"):
            TemplateSpec(
                family="drafting",
                task_kind="summarization",
                body="{{#if_criteria}}x{{/if_criteria}}",
            )

    def test_unknown_family(self):
        with pytest.raises(TemplateError):
            TemplateSpec(family="chatting", task_kind="summarization", body="x")


class TestLoadTemplate:
    def test_packaged_templates_exist_for_all_combinations(self):
        for family in ("drafting", "evaluation", "refinement"):
            for task in TASK_KINDS:
                spec = load_template(family, task)
                assert spec.family == family
                assert spec.task_kind == task
                assert spec.body

    def test_directory_override(self, tmp_path):
        (tmp_path / "drafting_summarization.txt").write_text(
            "Custom for {{aspect}}\n\n{{exemplars}}\n", encoding="utf-8"
        )
        spec = load_template("drafting", "summarization", directory=tmp_path)
        assert spec.body.startswith("Custom for")
        assert not spec.body.endswith("\n")

    def test_missing_override_file(self, tmp_path):
        with pytest.raises(TemplateError, match="no template file"):
            load_template("drafting", "summarization", directory=tmp_path)


class TestRenderValidation:
    def test_wrong_family_rejected(self):
        eval_spec = load_template("evaluation", "summarization")
        with pytest.raises(TemplateError, match="expected a drafting template"):
            render_drafting_prompt(
                eval_spec, fi.ASPECTS["summarization"], fi.exemplar_set("summarization")
            )

    def test_exemplar_aspect_mismatch_rejected(self):
        spec = load_template("drafting", "summarization")
        wrong_aspect = Aspect(name="fluency", scale_min=1, scale_max=5)
        with pytest.raises(TemplateError, match="labeled for 'coherence'"):
            render_drafting_prompt(spec, wrong_aspect, fi.exemplar_set("summarization"))

    def test_blank_criteria_rejected(self):
        spec = load_template("evaluation", "summarization")
        with pytest.raises(TemplateError, match="criteria text must be non-empty"):
            render_evaluation_prompt(
                spec, fi.ASPECTS["summarization"], "   ", fi.EVAL_SAMPLES["summarization"]
            )

    def test_empty_misalignment_rejected(self):
        spec = load_template("refinement", "summarization")
        empty = MisalignmentSet(items=(), criteria_id="a" * 16)
        with pytest.raises(TemplateError, match="at least one misaligned"):
            render_refinement_prompt(spec, fi.ASPECTS["summarization"], "old", empty)

    def test_leftover_marker_rejected(self):
        spec = TemplateSpec(
            family="drafting", task_kind="summarization", body="{{exemplars}} {{#odd}}"
        )
        with pytest.raises(TemplateError, match="unbound markers"):
            render_drafting_prompt(
                spec, fi.ASPECTS["summarization"], fi.exemplar_set("summarization")
            )

    def test_misaligned_example_requires_disagreement(self):
        with pytest.raises(ValueError, match="nothing is misaligned"):
            MisalignedExample(
                sample=fi.EVAL_SAMPLES["summarization"], human_score=3.0, llm_score=3.0
            )


class TestSerializeSample:
    def test_labels_per_task_kind(self):
        sample = fi.EVAL_SAMPLES["summarization"]
        text = serialize_sample(sample, "summarization")
        assert text.startswith("Article:\n")
        assert "\n\nSummary:\n" in text
        d2t = serialize_sample(fi.EVAL_SAMPLES["data_to_text"], "data_to_text")
        assert d2t.startswith("Data Expression:\n")
        assert "\n\nGenerated Sentence:\n" in d2t

    def test_unknown_task_kind(self):
        with pytest.raises(TemplateError):
            serialize_sample(fi.EVAL_SAMPLES["summarization"], "translation")


class TestParseScore:
    def setup_method(self):
        self.aspect = Aspect(name="coherence", scale_min=1, scale_max=5)

    def test_leading_integer(self):
        assert parse_score("4\nReasoning: solid.", self.aspect) == 4.0

    def test_near_grid_value_snaps(self):
        assert parse_score("4.4", self.aspect) == 4.0
        assert parse_score("Score: 2.8", self.aspect) == 3.0

    def test_halfway_token_is_ambiguous(self):
        with pytest.raises(UnparseableScoreError):
            parse_score("3.5", self.aspect)

    def test_first_qualifying_token_wins(self):
        assert parse_score("3 out of 5", self.aspect) == 3.0

    def test_out_of_range_token_skipped_then_next_used(self):
        assert parse_score("I rate it 9 wait, 4 actually", self.aspect) == 4.0

    def test_out_of_range_only_is_unparseable(self):
        with pytest.raises(UnparseableScoreError) as info:
            parse_score("easily an 11", self.aspect)
        assert info.value.raw == "easily an 11"

    def test_no_digits_is_unparseable(self):
        with pytest.raises(UnparseableScoreError):
            parse_score("no verdict, sorry", self.aspect)

    def test_negative_token_skipped(self):
        with pytest.raises(UnparseableScoreError):
            parse_score("-2", self.aspect)

    def test_binary_scale(self):
        binary = Aspect(name="consistency", scale_min=0, scale_max=1)
        assert parse_score("1", binary) == 1.0
        assert parse_score("0.1", binary) == 0.0
        with pytest.raises(UnparseableScoreError):
            parse_score("0.5", binary)

    def test_fractional_step(self):
        fine = Aspect(name="quality", scale_min=0, scale_max=1, scale_step=0.25)
        assert parse_score("0.6", fine) == 0.5
        assert parse_score("0.74", fine) == 0.75

    def test_retry_suffix_is_stable(self):
        assert RETRY_SUFFIX == "\nReturn only the numeric score."


class TestSampleExemplars:
    def test_same_seed_same_draw(self):
        golden = build_golden([1, 2, 3, 4, 5, 1, 2, 3])
        a = sample_exemplars(golden, 4, seed=99, aspect="coherence")
        b = sample_exemplars(golden, 4, seed=99, aspect="coherence")
        assert [s.id for s, _ in a.items] == [s.id for s, _ in b.items]
        assert a.draw_seed == 99 and a.draw_size == 4

    def test_different_seeds_differ(self):
        golden = build_golden(list(range(1, 6)) * 4)
        a = sample_exemplars(golden, 6, seed=1, aspect="coherence")
        b = sample_exemplars(golden, 6, seed=2, aspect="coherence")
        assert [s.id for s, _ in a.items] != [s.id for s, _ in b.items]

    def test_items_are_distinct_golden_members(self):
        golden = build_golden([1, 2, 3, 4, 5])
        drawn = sample_exemplars(golden, 3, seed=0, aspect="coherence")
        ids = [s.id for s, _ in drawn.items]
        assert len(set(ids)) == 3
        for sample, label in drawn.items:
            assert golden.sample(sample.id) == sample
            assert golden.label_for(sample.id, "coherence") == label

    def test_oversized_draw_rejected(self):
        golden = build_golden([1, 2, 3])
        with pytest.raises(ValueError, match="golden set holds 3"):
            sample_exemplars(golden, 4, seed=0, aspect="coherence")
        with pytest.raises(ValueError, match="must be positive"):
            sample_exemplars(golden, 0, seed=0, aspect="coherence")


class TestFormatNumber:
    def test_integers_lose_the_point(self):
        assert format_number(1.0) == "1"
        assert format_number(6) == "6"

    def test_fractions_stay(self):
        assert format_number(0.5) == "0.5"
        assert format_number(2.25) == "2.25"
