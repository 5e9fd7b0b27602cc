"""Correlation coefficients and meta-evaluation against hand oracles."""
import math
import random

import pytest

from judgecal import (
    CorrelationReport,
    DataError,
    EvaluationRecord,
    Objective,
    PairedScores,
    kendall,
    meta_eval_dataset_level,
    meta_eval_sample_level,
    pearson,
    spearman,
)

from conftest import build_golden, build_grid_golden


# ---------------------------------------------------------------------------
# Independent brute-force oracles. Pearson is the direct covariance formula,
# Spearman is rank-then-Pearson with fractional average ranks, Kendall is
# exhaustive pair counting with the tie-adjusted denominator.
# ---------------------------------------------------------------------------


def pearson_oracle(xs, ys):
    n = len(xs)
    if n < 2:
        raise ValueError("need two pairs")
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return None
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    cov = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = math.fsum((x - mx) ** 2 for x in xs)
    vy = math.fsum((y - my) ** 2 for y in ys)
    return cov / math.sqrt(vx * vy)


def average_ranks(values):
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def spearman_oracle(xs, ys):
    if len(xs) < 2:
        raise ValueError("need two pairs")
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return None
    return pearson_oracle(average_ranks(xs), average_ranks(ys))


def kendall_oracle(xs, ys):
    n = len(xs)
    if n < 2:
        raise ValueError("need two pairs")
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return None
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx * dy > 0:
                concordant += 1
            elif dx * dy < 0:
                discordant += 1
    n0 = n * (n - 1) // 2

    def tie_pairs(values):
        counts = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        return sum(c * (c - 1) // 2 for c in counts.values())

    denom = math.sqrt((n0 - tie_pairs(xs)) * (n0 - tie_pairs(ys)))
    return (concordant - discordant) / denom


ORACLES = {"pearson": pearson_oracle, "spearman": spearman_oracle, "kendall": kendall_oracle}
UNDER_TEST = {"pearson": pearson, "spearman": spearman, "kendall": kendall}


def random_tied_vectors(rng, n):
    """Integer vectors drawn from small ranges so ties are the norm."""
    span = rng.randint(1, 5)
    xs = [rng.randint(0, span) for _ in range(n)]
    ys = [rng.randint(0, span) for _ in range(n)]
    return xs, ys


class TestCoefficientsFrozen:
    """Hand-derived expected values, frozen independently of the code."""

    def test_single_swap_no_ties(self):
        pairs = PairedScores((1, 2, 3, 4, 5), (1, 2, 3, 5, 4))
        assert pearson(pairs) == pytest.approx(0.9, abs=1e-12)
        assert spearman(pairs) == pytest.approx(0.9, abs=1e-12)
        assert kendall(pairs) == pytest.approx(0.8, abs=1e-12)

    def test_tied_case(self):
        # x = [1,2,2,3], y = [1,2,3,3]:
        #   ranks x = [1, 2.5, 2.5, 4], ranks y = [1, 2, 3.5, 3.5]
        #   -> spearman = 3.75 / 4.5 = 5/6
        #   pair census: C=4, D=0, one x-only tie, one y-only tie
        #   -> tau-b = 4 / sqrt(5 * 5) = 0.8
        #   pearson = 2 / sqrt(2 * 2.75)
        pairs = PairedScores((1, 2, 2, 3), (1, 2, 3, 3))
        assert spearman(pairs) == pytest.approx(5 / 6, abs=1e-12)
        assert kendall(pairs) == pytest.approx(0.8, abs=1e-12)
        assert pearson(pairs) == pytest.approx(2 / math.sqrt(5.5), abs=1e-12)

    def test_perfect_and_inverted(self):
        up = PairedScores((1, 2, 3), (10, 20, 30))
        down = PairedScores((1, 2, 3), (30, 20, 10))
        for func in UNDER_TEST.values():
            assert func(up) == pytest.approx(1.0, abs=1e-12)
            assert func(down) == pytest.approx(-1.0, abs=1e-12)

    def test_too_few_pairs_is_an_error(self):
        for func in UNDER_TEST.values():
            with pytest.raises(ValueError):
                func(PairedScores((1.0,), (2.0,)))

    def test_constant_side_is_undefined_not_zero(self):
        const_pred = PairedScores((3, 3, 3), (1, 2, 3))
        const_human = PairedScores((1, 2, 3), (4, 4, 4))
        for func in UNDER_TEST.values():
            assert func(const_pred) is None
            assert func(const_human) is None

    def test_undefined_condition_shared_by_all_three(self):
        rng = random.Random(99)
        for _ in range(200):
            xs, ys = random_tied_vectors(rng, rng.randint(2, 12))
            pairs = PairedScores(tuple(xs), tuple(ys))
            states = {name: func(pairs) is None for name, func in UNDER_TEST.items()}
            assert len(set(states.values())) == 1, (xs, ys, states)


class TestCoefficientsAgainstOracles:
    def test_randomized_battery(self):
        rng = random.Random(1234)
        for _ in range(250):
            n = rng.randint(2, 30)
            xs, ys = random_tied_vectors(rng, n)
            pairs = PairedScores(tuple(float(x) for x in xs), tuple(float(y) for y in ys))
            for name in ORACLES:
                expected = ORACLES[name](xs, ys)
                got = UNDER_TEST[name](pairs)
                if expected is None:
                    assert got is None, (name, xs, ys)
                else:
                    assert got == pytest.approx(expected, abs=1e-12), (name, xs, ys)

    def test_agreement_with_scipy(self):
        """Third route: an established library must agree to 1e-12 as well."""
        from scipy import stats

        scipy_funcs = {
            "pearson": lambda xs, ys: stats.pearsonr(xs, ys).statistic,
            "spearman": lambda xs, ys: stats.spearmanr(xs, ys).statistic,
            "kendall": lambda xs, ys: stats.kendalltau(xs, ys, variant="b").statistic,
        }
        rng = random.Random(4321)
        for _ in range(200):
            n = rng.randint(3, 30)
            xs, ys = random_tied_vectors(rng, n)
            pairs = PairedScores(tuple(float(x) for x in xs), tuple(float(y) for y in ys))
            for name, func in UNDER_TEST.items():
                got = func(pairs)
                if got is None:
                    continue
                assert got == pytest.approx(
                    float(scipy_funcs[name](xs, ys)), abs=1e-12
                ), (name, xs, ys)


class TestPairedScores:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            PairedScores((1, 2), (1,))

    def test_tuple_coercion(self):
        assert pearson(((1, 2, 3), (1, 2, 3))) == pytest.approx(1.0)


class TestCorrelationReport:
    def test_roundtrip(self):
        report = CorrelationReport(
            pearson_r=0.5,
            spearman_rho=None,
            kendall_tau=0.25,
            level="sample",
            n_groups_total=4,
            n_groups_defined=3,
        )
        assert CorrelationReport.from_dict(report.to_dict()) == report

    def test_value_lookup(self):
        report = CorrelationReport(
            pearson_r=0.1,
            spearman_rho=0.2,
            kendall_tau=0.3,
            level="dataset",
            n_groups_total=1,
            n_groups_defined=1,
        )
        assert report.value("spearman") == 0.2
        with pytest.raises(ValueError):
            report.value("cosine")


def records_for(golden, predicted, aspect="coherence", criteria_id="c" * 16):
    out = []
    for (sample, _), score in zip(golden.ordered_pairs(aspect), predicted):
        out.append(
            EvaluationRecord(
                sample_id=sample.id,
                criteria_id=criteria_id,
                aspect=aspect,
                raw_completion="" if score is None else str(score),
                parsed_score=score,
            )
        )
    return tuple(out)


class TestMetaEvalSampleLevel:
    def test_hand_averaged_two_groups(self):
        # doc0 holds samples 0,2 plus 4; doc1 holds 1,3,5. With n_sources=2
        # the grid is: doc0 -> scores (1,3,5), doc1 -> (2,4,1).
        golden = build_golden([1, 2, 3, 4, 5, 1], n_sources=2)
        # doc0 predictions (2,3,4): perfectly ordered vs (1,3,5) -> rho 1.
        # doc1 predictions (1,2,3) vs humans (2,4,1): rank diffs (-1,-1,2)
        # give rho = 1 - 6*6/24 = -0.5.
        predicted = [2.0, 1.0, 3.0, 2.0, 4.0, 3.0]
        report = meta_eval_sample_level(golden, records_for(golden, predicted))
        g1 = spearman_oracle([2, 3, 4], [1, 3, 5])
        g2 = spearman_oracle([1, 2, 3], [2, 4, 1])
        assert g1 == 1.0 and g2 == -0.5
        assert report.spearman_rho == pytest.approx((g1 + g2) / 2, abs=1e-12)
        assert report.kendall_tau == pytest.approx(
            (kendall_oracle([2, 3, 4], [1, 3, 5]) + kendall_oracle([1, 2, 3], [2, 4, 1])) / 2,
            abs=1e-12,
        )
        assert report.pearson_r == pytest.approx(
            (pearson_oracle([2, 3, 4], [1, 3, 5]) + pearson_oracle([1, 2, 3], [2, 4, 1])) / 2,
            abs=1e-12,
        )
        assert report.n_groups_total == 2
        assert report.n_groups_defined == 2

    def test_degenerate_group_skipped_and_disclosed(self):
        grid = {
            "docA": {"m1": 1, "m2": 3, "m3": 5},
            "docB": {"m1": 4, "m2": 4, "m3": 4},  # constant humans: undefined
        }
        golden = build_grid_golden(grid)
        predicted = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0]
        report = meta_eval_sample_level(golden, records_for(golden, predicted))
        assert report.n_groups_total == 2
        assert report.n_groups_defined == 1
        assert report.spearman_rho == pytest.approx(1.0, abs=1e-12)

    def test_all_groups_degenerate_is_undefined(self):
        grid = {"docA": {"m1": 2, "m2": 2}, "docB": {"m1": 3, "m2": 3}}
        golden = build_grid_golden(grid)
        report = meta_eval_sample_level(golden, records_for(golden, [1.0, 2.0, 1.0, 2.0]))
        assert report.spearman_rho is None
        assert report.n_groups_defined == 0

    def test_excluded_predictions_shrink_groups(self):
        grid = {"docA": {"m1": 1, "m2": 3, "m3": 5}}
        golden = build_grid_golden(grid)
        # One exclusion leaves two pairs: still defined.
        report = meta_eval_sample_level(golden, records_for(golden, [1.0, None, 4.0]))
        assert report.n_groups_defined == 1
        # Two exclusions leave a single pair: skipped.
        report = meta_eval_sample_level(golden, records_for(golden, [1.0, None, None]))
        assert report.n_groups_defined == 0
        assert report.spearman_rho is None

    def test_duplicate_record_rejected(self):
        golden = build_golden([1, 2, 3])
        records = records_for(golden, [1.0, 2.0, 3.0])
        with pytest.raises(DataError, match="duplicate evaluation record"):
            meta_eval_sample_level(golden, records + records[:1])

    def test_missing_record_rejected(self):
        golden = build_golden([1, 2, 3])
        records = records_for(golden, [1.0, 2.0, 3.0])
        with pytest.raises(DataError, match="missing evaluation record"):
            meta_eval_sample_level(golden, records[:2])


class TestMetaEvalDatasetLevel:
    def test_flat_equality_with_direct_functions(self):
        golden = build_golden([1, 4, 2, 5, 3, 1, 4], n_sources=3)
        predicted = [2.0, 3.0, 2.0, 5.0, 1.0, 1.0, 4.0]
        report = meta_eval_dataset_level(golden, records_for(golden, predicted))
        humans = [label.score for _, label in golden.ordered_pairs("coherence")]
        pairs = PairedScores(tuple(predicted), tuple(humans))
        assert report.spearman_rho == spearman(pairs)
        assert report.pearson_r == pearson(pairs)
        assert report.kendall_tau == kendall(pairs)
        assert report.level == "dataset"
        assert report.n_groups_total == 1
        assert report.n_groups_defined == 1

    def test_constant_predictions_undefined(self):
        golden = build_golden([1, 2, 3, 4])
        report = meta_eval_dataset_level(golden, records_for(golden, [2.0] * 4))
        assert report.spearman_rho is None
        assert report.n_groups_defined == 0


class TestObjective:
    def test_defaults(self):
        obj = Objective()
        assert obj.coefficient == "spearman"
        assert obj.level == "dataset"
        assert obj.describe() == "dataset-level spearman"

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            Objective(coefficient="cosine")
        with pytest.raises(ValueError):
            Objective(level="corpus")

    def test_evaluate_routes_by_level(self):
        golden = build_golden([1, 2, 3, 4], n_sources=2)
        records = records_for(golden, [1.0, 2.0, 3.0, 4.0])
        assert Objective(level="dataset").evaluate(golden, records).level == "dataset"
        assert Objective(level="sample").evaluate(golden, records).level == "sample"

    def test_value_extraction(self):
        golden = build_golden([1, 2, 3, 4])
        records = records_for(golden, [4.0, 3.0, 2.0, 1.0])
        obj = Objective(coefficient="kendall", level="dataset")
        report = obj.evaluate(golden, records)
        assert obj.value(report) == pytest.approx(-1.0, abs=1e-12)
