from __future__ import annotations

import math
import random

import pytest

from oracles import (
    oracle_alpha_ordinal,
    oracle_mean_std,
    oracle_pairwise_deviation,
    oracle_pearson,
    oracle_qwk,
)
from subscore.metrics import (
    AgreementStats,
    MetricError,
    agreement,
    averaged_confusion,
    classification_report,
    confusion_counts,
    exact_agreement,
    krippendorff_alpha_ordinal,
    pairwise_run_deviation,
    pearson_r,
    qwk,
    sample_std,
    true_score,
)
from subscore.rubric import ScoreScale

SCALE = ScoreScale(0, 3)


# --- qwk ----------------------------------------------------------------


def test_qwk_matches_bruteforce_on_random_pairs():
    rng = random.Random(41)
    for _ in range(300):
        n = rng.randint(2, 20)
        a = [rng.randint(0, 3) for _ in range(n)]
        b = [rng.randint(0, 3) for _ in range(n)]
        assert qwk(a, b, SCALE) == pytest.approx(oracle_qwk(a, b, 0, 3), abs=1e-12)


def test_qwk_perfect_agreement_is_one():
    rng = random.Random(7)
    for _ in range(20):
        a = [rng.randint(0, 3) for _ in range(rng.randint(2, 12))]
        assert qwk(a, a, SCALE) == 1.0


def test_qwk_constant_identical_ratings_is_one():
    # both disagreement sums are zero, which the convention maps to 1.0
    assert qwk([2, 2, 2], [2, 2, 2], SCALE) == 1.0


def test_qwk_two_category_reversal_is_minus_one():
    assert qwk([0, 0, 1, 1], [1, 1, 0, 0], ScoreScale(0, 1)) == pytest.approx(-1.0)


def test_qwk_three_category_hand_case():
    # observed weighted disagreement 0.0625, expected 0.3125
    assert qwk([0, 1, 2, 2], [0, 1, 1, 2], ScoreScale(0, 2)) == pytest.approx(0.8)


def test_qwk_scale_widening_is_neutral_but_validated():
    # widening the declared span rescales every weight by the same constant,
    # which cancels; the declared scale's job is rejecting stray values
    a, b = [0, 0, 1, 1], [1, 1, 0, 0]
    assert qwk(a, b, ScoreScale(0, 3)) == pytest.approx(qwk(a, b, ScoreScale(0, 1)), abs=1e-12)
    with pytest.raises(MetricError):
        qwk([0, 2], [0, 1], ScoreScale(0, 1))


def test_qwk_rejects_bad_input():
    with pytest.raises(MetricError):
        qwk([1], [1], SCALE)
    with pytest.raises(MetricError):
        qwk([1, 2], [1], SCALE)
    with pytest.raises(MetricError):
        qwk([1, 9], [1, 2], SCALE)


# --- exact agreement / pearson -------------------------------------------


def test_exact_agreement():
    assert exact_agreement([1, 2, 3], [1, 2, 0]) == pytest.approx(2 / 3)
    assert exact_agreement([1, 1], [1, 1]) == 1.0


def test_pearson_r_hand_case():
    assert pearson_r([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)


def test_pearson_r_matches_bruteforce():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(3, 30)
        x = [rng.uniform(0, 3) for _ in range(n)]
        y = [rng.uniform(0, 3) for _ in range(n)]
        assert pearson_r(x, y) == pytest.approx(oracle_pearson(x, y), abs=1e-12)


def test_pearson_r_constant_input_is_an_error():
    with pytest.raises(MetricError):
        pearson_r([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])


# --- true score -----------------------------------------------------------


def test_true_score_policies():
    assert true_score(1, 2, "first_read") == 1
    assert true_score(1, 2, "rounded_average") == 2  # halves away from zero
    assert true_score(2, 2, "rounded_average") == 2
    assert true_score(0, 1, "rounded_average") == 1
    assert true_score(0, 3, "rounded_average") == 2
    with pytest.raises(MetricError):
        true_score(1, 2, "median")


# --- confusion ------------------------------------------------------------


def test_confusion_counts_layout():
    m = confusion_counts([0, 0, 1, 3], [0, 1, 1, 3], SCALE)
    assert m.cell(0, 0) == 1
    assert m.cell(0, 1) == 1
    assert m.cell(1, 1) == 1
    assert m.cell(3, 3) == 1
    assert m.total() == 4


def test_averaged_confusion_weights_runs_equally_per_response():
    m = averaged_confusion([1, 2], [[1, 1, 2, 2], [2]], SCALE)
    assert m.cell(1, 1) == pytest.approx(0.5)
    assert m.cell(1, 2) == pytest.approx(0.5)
    assert m.cell(2, 2) == pytest.approx(1.0)
    assert m.total() == pytest.approx(2.0)  # cell mass equals response count


def test_averaged_confusion_rejects_empty_runs():
    with pytest.raises(MetricError):
        averaged_confusion([1], [[]], SCALE)


# --- classification report -------------------------------------------------


def test_classification_report_hand_case():
    # truth:      0 0 1 1 2
    # predicted:  0 1 1 1 1
    rep = classification_report([0, 0, 1, 1, 2], [0, 1, 1, 1, 1], SCALE)
    r0 = rep.rows[0]
    assert r0.precision == pytest.approx(1.0)
    assert r0.recall == pytest.approx(0.5)
    assert r0.f1 == pytest.approx(2 / 3)
    r1 = rep.rows[1]
    assert r1.precision == pytest.approx(0.5)
    assert r1.recall == pytest.approx(1.0)
    assert r1.f1 == pytest.approx(2 / 3)
    assert rep.rows[2].recall == 0.0
    assert rep.accuracy == pytest.approx(3 / 5)
    assert rep.macro.support == 5


def test_classification_report_zero_division_conventions():
    # scorepoint 3 never predicted and never correct: precision 1.0, recall 0, f1 0
    rep = classification_report([3, 0], [0, 0], SCALE)
    r3 = rep.rows[3]
    assert r3.precision == 1.0
    assert r3.recall == 0.0
    assert r3.f1 == 0.0
    # the convention is configurable for sklearn-style comparisons
    rep0 = classification_report([3, 0], [0, 0], SCALE, zero_division_precision=0.0)
    assert rep0.rows[3].precision == 0.0
    # scorepoint with no true instances: recall 0.0
    assert rep.rows[1].recall == 0.0
    assert rep.rows[1].support == 0


def test_classification_macro_averages_all_scale_points():
    rep = classification_report([0, 1], [0, 1], SCALE)
    # SP2 and SP3 are absent: precision 1.0 (no predictions), recall 0.0
    assert rep.macro.precision == pytest.approx((1.0 + 1.0 + 1.0 + 1.0) / 4)
    assert rep.macro.recall == pytest.approx((1.0 + 1.0 + 0.0 + 0.0) / 4)


def test_classification_report_as_dict_round_trip():
    rep = classification_report([0, 1, 2], [0, 1, 1], SCALE)
    doc = rep.as_dict()
    assert set(doc["rows"]) == {"0", "1", "2", "3"}
    assert doc["macro"]["support"] == 3
    assert doc["accuracy"] == pytest.approx(2 / 3)


# --- run-to-run consistency -------------------------------------------------


def test_pairwise_deviation_hand_fixture():
    stats = pairwise_run_deviation([[1, 2, 1], [1, 1, 1]])
    assert stats.mae_mean == pytest.approx(1 / 3, abs=1e-9)
    assert stats.mae_std == pytest.approx(math.sqrt(1 / 12), abs=1e-9)
    assert stats.rmse_mean == pytest.approx(math.sqrt(2) / 3, abs=1e-9)
    assert stats.pair_count == 3


def test_pairwise_deviation_matches_bruteforce():
    rng = random.Random(13)
    for _ in range(60):
        n_resp = rng.randint(1, 12)
        k = rng.randint(2, 10)
        matrix = [
            [rng.randint(0, 3) if rng.random() > 0.15 else None for _ in range(k)]
            for _ in range(n_resp)
        ]
        try:
            stats = pairwise_run_deviation(matrix)
        except MetricError:
            maes, _ = oracle_pairwise_deviation(matrix)
            assert not maes
            continue
        maes, rmses = oracle_pairwise_deviation(matrix)
        mae_mean, mae_std = oracle_mean_std(maes)
        rmse_mean, rmse_std = oracle_mean_std(rmses)
        assert stats.mae_mean == pytest.approx(mae_mean, abs=1e-12)
        assert stats.mae_std == pytest.approx(mae_std, abs=1e-12)
        assert stats.rmse_mean == pytest.approx(rmse_mean, abs=1e-12)
        assert stats.rmse_std == pytest.approx(rmse_std, abs=1e-12)
        assert stats.pair_count == len(maes)


def test_pairwise_deviation_single_pair_reports_zero_std():
    stats = pairwise_run_deviation([[1, 2], [0, 0]])
    assert stats.mae_std == 0.0
    assert stats.rmse_std == 0.0
    assert stats.pair_count == 1


def test_pairwise_deviation_skips_pairs_with_no_common_rows():
    matrix = [[1, None, 2], [None, 3, None]]
    stats = pairwise_run_deviation(matrix)
    # pair (0,1) and (1,2) share no rows; only (0,2) counts
    assert stats.pair_count == 1
    assert stats.mae_mean == pytest.approx(1.0)


def test_pairwise_deviation_input_errors():
    with pytest.raises(MetricError):
        pairwise_run_deviation([])
    with pytest.raises(MetricError):
        pairwise_run_deviation([[1]])
    with pytest.raises(MetricError):
        pairwise_run_deviation([[1, 2], [1]])
    with pytest.raises(MetricError):
        pairwise_run_deviation([[None, 1], [2, None]])


def test_sample_std_conventions():
    assert sample_std([5.0]) == 0.0
    assert sample_std([1.0, 3.0]) == pytest.approx(math.sqrt(2))


# --- krippendorff alpha ------------------------------------------------------


def test_alpha_hand_case_four_ninths():
    units = [[0, 0], [1, 1], [0, 1]]
    assert krippendorff_alpha_ordinal(units) == pytest.approx(4 / 9, abs=1e-12)


def test_alpha_matches_bruteforce_on_random_matrices():
    rng = random.Random(97)
    checked = 0
    while checked < 150:
        n_units = rng.randint(2, 8)
        n_raters = rng.randint(2, 6)
        units = [
            [rng.randint(0, 3) if rng.random() > 0.3 else None for _ in range(n_raters)]
            for _ in range(n_units)
        ]
        try:
            expected = oracle_alpha_ordinal(units)
        except ValueError:
            with pytest.raises(MetricError):
                krippendorff_alpha_ordinal(units)
            continue
        assert krippendorff_alpha_ordinal(units) == pytest.approx(expected, abs=1e-12)
        checked += 1


def test_alpha_identical_raters_is_one():
    units = [[s, s, s] for s in (0, 1, 2, 3, 1, 2)]
    assert krippendorff_alpha_ordinal(units) == pytest.approx(1.0)


def test_alpha_constant_data_is_one_by_convention():
    # expected disagreement 0 -> defined as full agreement
    assert krippendorff_alpha_ordinal([[2, 2], [2, 2]]) == 1.0


def test_alpha_excludes_units_with_fewer_than_two_ratings():
    base = [[0, 1], [1, 1]]
    padded = base + [[3, None], [None, None]]
    assert krippendorff_alpha_ordinal(padded) == pytest.approx(
        krippendorff_alpha_ordinal(base)
    )


def test_alpha_no_pairable_values_is_an_error():
    with pytest.raises(MetricError, match="no pairable values"):
        krippendorff_alpha_ordinal([[1, None], [None, 2]])


# --- combined agreement -------------------------------------------------------


def test_agreement_bundles_qwk_and_exact():
    stats = agreement([0, 1, 2, 3], [0, 1, 2, 2], SCALE)
    assert isinstance(stats, AgreementStats)
    assert stats.n == 4
    assert stats.exact == pytest.approx(0.75)
    assert stats.qwk == pytest.approx(oracle_qwk([0, 1, 2, 3], [0, 1, 2, 2], 0, 3), abs=1e-12)
