from __future__ import annotations

import math
import random

import pytest

from subscore.corpus import EvidenceSpan
from subscore.evidence import (
    SpanSet,
    aggregate_overlap,
    merge_spans,
    span_overlap_stats,
)


def spans(*pairs):
    return tuple(EvidenceSpan(a, b, "") for a, b in pairs)


def human(*pairs, rid="r", sid="s"):
    return SpanSet(rid, sid, "human", spans(*pairs))


def model(*pairs, rid="r", sid="s"):
    return SpanSet(rid, sid, "model", spans(*pairs))


# --- merging -----------------------------------------------------------------


def test_merge_overlapping_and_touching():
    assert merge_spans(spans((0, 5), (3, 8))) == [(0, 8)]
    assert merge_spans(spans((0, 5), (5, 8))) == [(0, 8)]  # touching counts
    assert merge_spans(spans((0, 5), (6, 8))) == [(0, 5), (6, 8)]


def test_merge_is_order_insensitive():
    a = merge_spans(spans((10, 20), (0, 5), (18, 25), (5, 7)))
    b = merge_spans(spans((0, 5), (5, 7), (10, 20), (18, 25)))
    assert a == b == [(0, 7), (10, 25)]


def test_merge_nested_spans():
    assert merge_spans(spans((0, 20), (5, 10))) == [(0, 20)]


def test_span_set_sorts_itself():
    s = SpanSet("r", "s", "human", spans((10, 12), (0, 2)))
    assert [sp.start for sp in s.spans] == [0, 10]
    with pytest.raises(ValueError):
        SpanSet("r", "s", "robot", ())


# --- overlap stats --------------------------------------------------------------


def test_hand_case_third_half_one():
    stats = span_overlap_stats(human((0, 10)), model((5, 15)))
    assert stats.char_jaccard == pytest.approx(1 / 3)
    assert stats.human_coverage == pytest.approx(0.5)
    assert stats.overproduction == pytest.approx(1.0)
    assert stats.human_chars == 10
    assert stats.model_chars == 10
    assert stats.intersection_chars == 5


def test_identical_spans_are_perfect():
    stats = span_overlap_stats(human((3, 9)), model((3, 9)))
    assert stats.char_jaccard == 1.0
    assert stats.human_coverage == 1.0
    assert stats.overproduction == 1.0


def test_both_empty_is_vacuous_agreement():
    stats = span_overlap_stats(human(), model())
    assert (stats.char_jaccard, stats.human_coverage, stats.overproduction) == (1.0, 1.0, 1.0)


def test_empty_human_nonempty_model_is_infinite_overproduction():
    stats = span_overlap_stats(human(), model((0, 4)))
    assert stats.char_jaccard == 0.0
    assert stats.human_coverage == 1.0  # nothing demanded, nothing missed
    assert math.isinf(stats.overproduction)


def test_nonempty_human_empty_model():
    stats = span_overlap_stats(human((0, 4)), model())
    assert stats.char_jaccard == 0.0
    assert stats.human_coverage == 0.0
    assert stats.overproduction == 0.0


def test_stats_invariant_to_span_splitting():
    whole = span_overlap_stats(human((0, 10)), model((2, 8)))
    split = span_overlap_stats(human((0, 4), (4, 10)), model((2, 5), (5, 8)))
    assert whole == split


def test_disjoint_multi_span_overlap():
    stats = span_overlap_stats(human((0, 10), (20, 30)), model((5, 25)))
    assert stats.intersection_chars == 10  # 5..10 and 20..25
    assert stats.human_chars == 20
    assert stats.model_chars == 20
    assert stats.char_jaccard == pytest.approx(10 / 30)


def test_mismatched_response_ids_rejected():
    with pytest.raises(ValueError, match="different responses"):
        span_overlap_stats(human((0, 2), rid="a"), model((0, 2), rid="b"))


def test_intersection_matches_bruteforce_on_random_spans():
    rng = random.Random(23)
    for _ in range(100):
        hp = sorted(rng.sample(range(0, 60), 2 * rng.randint(1, 4)))
        mp = sorted(rng.sample(range(0, 60), 2 * rng.randint(1, 4)))
        hsp = [(hp[i], hp[i + 1]) for i in range(0, len(hp), 2) if hp[i] < hp[i + 1]]
        msp = [(mp[i], mp[i + 1]) for i in range(0, len(mp), 2) if mp[i] < mp[i + 1]]
        if not hsp or not msp:
            continue
        stats = span_overlap_stats(human(*hsp), model(*msp))
        hset = {c for a, b in hsp for c in range(a, b)}
        mset = {c for a, b in msp for c in range(a, b)}
        assert stats.intersection_chars == len(hset & mset)
        assert stats.human_chars == len(hset)
        assert stats.model_chars == len(mset)
        expected_j = len(hset & mset) / len(hset | mset)
        assert stats.char_jaccard == pytest.approx(expected_j, abs=1e-12)


# --- aggregation -------------------------------------------------------------------


def test_aggregate_keeps_infinite_cases_out_of_the_mean():
    stats = [
        span_overlap_stats(human((0, 10)), model((5, 15))),
        span_overlap_stats(human(), model((0, 5))),
        span_overlap_stats(human((0, 4)), model((0, 8))),
    ]
    agg = aggregate_overlap("intro", stats)
    assert agg.n == 3
    assert agg.empty_human_count == 1
    assert agg.mean_overproduction == pytest.approx((1.0 + 2.0) / 2)
    assert agg.mean_jaccard == pytest.approx((1 / 3 + 0.0 + 0.5) / 3)


def test_aggregate_all_infinite_reports_none():
    stats = [span_overlap_stats(human(), model((0, 5)))]
    agg = aggregate_overlap("intro", stats)
    assert agg.mean_overproduction is None
    assert agg.empty_human_count == 1


def test_aggregate_requires_input():
    with pytest.raises(ValueError):
        aggregate_overlap("intro", [])
