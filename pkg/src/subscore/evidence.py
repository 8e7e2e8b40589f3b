"""Human-vs-model evidence span overlap measurement.

Spans are merged within each side before measurement, so statistics do not
depend on how a highlighted region was split into sub-spans. All measurement
is character-level: human highlights arrive as character ranges, and published
examples show sub-sentence selections, so tokens would lose information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import EvidenceSpan

OVERPRODUCTION_EMPTY_HUMAN = math.inf


def merge_spans(spans: Iterable[EvidenceSpan]) -> list[tuple[int, int]]:
    """Collapse overlapping or touching spans into disjoint (start, end) runs."""
    ordered = sorted((s.start, s.end) for s in spans)
    merged: list[tuple[int, int]] = []
    for start, end in ordered:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _char_count(merged: list[tuple[int, int]]) -> int:
    return sum(end - start for start, end in merged)


def _intersection_size(a: list[tuple[int, int]], b: list[tuple[int, int]]) -> int:
    total = 0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            total += hi - lo
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return total


@dataclass(frozen=True)
class SpanSet:
    response_id: str
    subtrait_id: str
    source: str  # "human" | "model"
    spans: tuple[EvidenceSpan, ...]

    def __post_init__(self):
        if self.source not in ("human", "model"):
            raise ValueError(f"source must be 'human' or 'model', got {self.source!r}")
        starts = [s.start for s in self.spans]
        if starts != sorted(starts):
            object.__setattr__(self, "spans", tuple(sorted(self.spans, key=lambda s: (s.start, s.end))))


@dataclass(frozen=True)
class OverlapStats:
    char_jaccard: float
    human_coverage: float
    overproduction: float  # model chars / human chars; inf when human empty, model not
    human_chars: int
    model_chars: int
    intersection_chars: int


def span_overlap_stats(human: SpanSet, model: SpanSet) -> OverlapStats:
    """Character-level overlap between one subtrait's human and model evidence.

    Both-empty counts as perfect vacuous agreement (1.0 across the board):
    abstaining from evidence is itself the right judgment for the lowest
    scorepoint. Empty human with non-empty model yields the infinity
    overproduction sentinel.
    """
    if human.response_id != model.response_id:
        raise ValueError(f"span sets reference different responses: {human.response_id!r} vs {model.response_id!r}")
    h = merge_spans(human.spans)
    m = merge_spans(model.spans)
    h_chars = _char_count(h)
    m_chars = _char_count(m)
    inter = _intersection_size(h, m)
    union = h_chars + m_chars - inter
    if h_chars == 0 and m_chars == 0:
        return OverlapStats(1.0, 1.0, 1.0, 0, 0, 0)
    jaccard = inter / union if union else 1.0
    coverage = inter / h_chars if h_chars else 1.0
    overproduction = m_chars / h_chars if h_chars else OVERPRODUCTION_EMPTY_HUMAN
    return OverlapStats(
        char_jaccard=jaccard,
        human_coverage=coverage,
        overproduction=overproduction,
        human_chars=h_chars,
        model_chars=m_chars,
        intersection_chars=inter,
    )


@dataclass(frozen=True)
class OverlapAggregate:
    subtrait_id: str
    n: int
    mean_jaccard: float
    mean_coverage: float
    mean_overproduction: float | None  # mean over finite ratios; None when none finite
    empty_human_count: int  # responses where human cited nothing but the model did


def aggregate_overlap(subtrait_id: str, stats: Sequence[OverlapStats]) -> OverlapAggregate:
    """Average per-response overlap stats for one subtrait.

    Overproduction averages only finite ratios; the infinite-sentinel cases
    are counted separately so they stay visible instead of poisoning a mean.
    """
    if not stats:
        raise ValueError("no overlap stats to aggregate")
    finite = [s.overproduction for s in stats if math.isfinite(s.overproduction)]
    return OverlapAggregate(
        subtrait_id=subtrait_id,
        n=len(stats),
        mean_jaccard=sum(s.char_jaccard for s in stats) / len(stats),
        mean_coverage=sum(s.human_coverage for s in stats) / len(stats),
        mean_overproduction=(sum(finite) / len(finite)) if finite else None,
        empty_human_count=sum(1 for s in stats if not math.isfinite(s.overproduction)),
    )
