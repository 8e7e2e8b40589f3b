"""Agreement, correlation, classification, and consistency statistics.

All functions are pure and operate on plain sequences; adapters elsewhere
turn corpus/run objects into these inputs. Conventions that published tables
leave unstated (zero-division handling, std flavor, y_true policy) are
explicit parameters or documented defaults, and reports echo them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import Corpus
from .rubric import ScoreScale, SkillTree


class MetricError(ValueError):
    pass


def _check_aligned(a: Sequence, b: Sequence, minimum: int = 1) -> None:
    if len(a) != len(b):
        raise MetricError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < minimum:
        raise MetricError(f"need at least {minimum} aligned values, got {len(a)}")


def qwk(a: Sequence[int], b: Sequence[int], scale: ScoreScale) -> float:
    """Cohen's kappa with quadratic weights over the declared scale.

    Weights are w(i,j) = (i-j)^2 / (max-min)^2 over the *declared* span, not
    the observed range, so a truncated sample is still judged against the full
    scale. Returns 1.0 when both observed and expected weighted disagreement
    vanish (all mass on one scorepoint, or a single-point scale).
    """
    _check_aligned(a, b, minimum=2)
    for v in list(a) + list(b):
        if not scale.contains(v):
            raise MetricError(f"value {v} outside scale {scale.min}..{scale.max}")
    points = scale.points()
    index = {p: i for i, p in enumerate(points)}
    size = len(points)
    n = len(a)
    observed = [[0.0] * size for _ in range(size)]
    for x, y in zip(a, b):
        observed[index[x]][index[y]] += 1.0
    row = [sum(observed[i][j] for j in range(size)) for i in range(size)]
    col = [sum(observed[i][j] for i in range(size)) for j in range(size)]
    span = scale.max - scale.min
    if span == 0:
        return 1.0
    num = 0.0
    den = 0.0
    for i in range(size):
        for j in range(size):
            w = (points[i] - points[j]) ** 2 / span**2
            num += w * observed[i][j]
            den += w * row[i] * col[j] / n
    if den == 0.0:
        return 1.0
    return 1.0 - num / den


def exact_agreement(a: Sequence[int], b: Sequence[int]) -> float:
    _check_aligned(a, b, minimum=1)
    return sum(1 for x, y in zip(a, b) if x == y) / len(a)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation; rejects degenerate (constant) input."""
    _check_aligned(x, y, minimum=2)
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((v - mx) ** 2 for v in x)
    syy = sum((v - my) ** 2 for v in y)
    if sxx == 0.0 or syy == 0.0:
        raise MetricError("zero variance: correlation undefined for constant input")
    sxy = sum((vx - mx) * (vy - my) for vx, vy in zip(x, y))
    return sxy / math.sqrt(sxx * syy)


TRUE_SCORE_POLICIES = ("first_read", "rounded_average")


def true_score(read1: int, read2: int, policy: str = "first_read") -> int:
    """Collapse two human reads into one ground-truth score.

    ``first_read`` takes read1 verbatim. ``rounded_average`` rounds the mean
    with halves away from zero, so (1,2) -> 2.
    """
    if policy == "first_read":
        return read1
    if policy == "rounded_average":
        doubled = read1 + read2
        quotient, remainder = divmod(abs(doubled), 2)
        rounded = quotient + (1 if remainder else 0)
        return rounded if doubled >= 0 else -rounded
    raise MetricError(f"unknown y_true policy {policy!r}; expected one of {TRUE_SCORE_POLICIES}")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square (true x predicted) matrix over a declared scale.

    Cells are integer-valued for single-run tallies and real-valued when
    averaged over runs.
    """

    scale: ScoreScale
    cells: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        size = self.scale.size
        if len(self.cells) != size or any(len(r) != size for r in self.cells):
            raise MetricError(f"confusion matrix must be {size}x{size}")
        if any(c < 0 for r in self.cells for c in r):
            raise MetricError("confusion cells must be nonnegative")

    def total(self) -> float:
        return sum(sum(r) for r in self.cells)

    def cell(self, true: int, predicted: int) -> float:
        return self.cells[true - self.scale.min][predicted - self.scale.min]


def confusion_counts(true_scores: Sequence[int], predicted: Sequence[int], scale: ScoreScale) -> ConfusionMatrix:
    _check_aligned(true_scores, predicted, minimum=1)
    size = scale.size
    cells = [[0.0] * size for _ in range(size)]
    for t, p in zip(true_scores, predicted):
        if not scale.contains(t) or not scale.contains(p):
            raise MetricError(f"value outside scale {scale.min}..{scale.max}: ({t}, {p})")
        cells[t - scale.min][p - scale.min] += 1.0
    return ConfusionMatrix(scale=scale, cells=tuple(tuple(r) for r in cells))


def averaged_confusion(
    true_scores: Sequence[int],
    run_scores: Sequence[Sequence[int]],
    scale: ScoreScale,
) -> ConfusionMatrix:
    """Run-averaged confusion: each usable run contributes 1/K to its cell.

    ``run_scores[i]`` holds the usable (parsed, in-scale) run scores for
    response i; a response with zero usable runs is an error because it cannot
    be averaged. Cell sum equals the response count.
    """
    _check_aligned(true_scores, run_scores, minimum=1)
    size = scale.size
    cells = [[0.0] * size for _ in range(size)]
    for i, (t, runs) in enumerate(zip(true_scores, run_scores)):
        if not runs:
            raise MetricError(f"response at position {i} has zero usable runs")
        if not scale.contains(t):
            raise MetricError(f"true score {t} outside scale {scale.min}..{scale.max}")
        weight = 1.0 / len(runs)
        for p in runs:
            if not scale.contains(p):
                raise MetricError(f"run score {p} outside scale {scale.min}..{scale.max}")
            cells[t - scale.min][p - scale.min] += weight
    return ConfusionMatrix(scale=scale, cells=tuple(tuple(r) for r in cells))


@dataclass(frozen=True)
class ClassRow:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    scale: ScoreScale
    rows: Mapping[int, ClassRow]  # keyed by scorepoint
    macro: ClassRow
    accuracy: float
    zero_division_precision: float

    def as_dict(self) -> dict:
        return {
            "scale": {"min": self.scale.min, "max": self.scale.max},
            "zero_division_precision": self.zero_division_precision,
            "rows": {
                str(sp): {"precision": r.precision, "recall": r.recall, "f1": r.f1, "support": r.support}
                for sp, r in sorted(self.rows.items())
            },
            "macro": {
                "precision": self.macro.precision,
                "recall": self.macro.recall,
                "f1": self.macro.f1,
                "support": self.macro.support,
            },
            "accuracy": self.accuracy,
        }


def classification_report(
    true_scores: Sequence[int],
    predicted: Sequence[int],
    scale: ScoreScale,
    zero_division_precision: float = 1.0,
) -> ClassificationReport:
    """Per-scorepoint precision/recall/F1 plus an unweighted macro row.

    Zero-denominator convention: precision := ``zero_division_precision``
    (default 1.0) when a scorepoint receives no predictions, recall := 0.0
    when it has no true instances, F1 := 0.0 when precision + recall = 0.
    """
    if zero_division_precision not in (0.0, 1.0):
        raise MetricError("zero_division_precision must be 0.0 or 1.0")
    counts = confusion_counts(true_scores, predicted, scale)
    rows: dict[int, ClassRow] = {}
    for sp in scale.points():
        i = sp - scale.min
        tp = counts.cells[i][i]
        predicted_total = sum(counts.cells[j][i] for j in range(scale.size))
        true_total = sum(counts.cells[i])
        precision = tp / predicted_total if predicted_total > 0 else zero_division_precision
        recall = tp / true_total if true_total > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        rows[sp] = ClassRow(precision=precision, recall=recall, f1=f1, support=int(true_total))
    size = scale.size
    macro = ClassRow(
        precision=sum(r.precision for r in rows.values()) / size,
        recall=sum(r.recall for r in rows.values()) / size,
        f1=sum(r.f1 for r in rows.values()) / size,
        support=len(true_scores),
    )
    accuracy = sum(counts.cells[i][i] for i in range(size)) / len(true_scores)
    return ClassificationReport(
        scale=scale,
        rows=rows,
        macro=macro,
        accuracy=accuracy,
        zero_division_precision=zero_division_precision,
    )


def sample_std(values: Sequence[float]) -> float:
    """Sample (n-1) standard deviation; a single value has deviation 0.0."""
    n = len(values)
    if n == 0:
        raise MetricError("no values")
    if n == 1:
        return 0.0
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))


@dataclass(frozen=True)
class ConsistencyStats:
    mae_mean: float
    mae_std: float
    rmse_mean: float
    rmse_std: float
    pair_count: int
    alpha: float | None = None


def pairwise_run_deviation(run_matrix: Sequence[Sequence[int | None]]) -> ConsistencyStats:
    """Run-to-run deviation over all unordered run pairs.

    ``run_matrix`` is responses x K runs; ``None`` marks a failed run. For
    each of the C(K,2) run pairs, MAE and RMSE are taken over responses both
    runs scored; pairs with no common responses are skipped. The summary is
    mean +/- sample std across pairs (a single pair reports std 0.0).
    """
    if not run_matrix:
        raise MetricError("empty run matrix")
    k = len(run_matrix[0])
    if any(len(row) != k for row in run_matrix):
        raise MetricError("ragged run matrix")
    if k < 2:
        raise MetricError(f"need at least 2 runs, got {k}")
    maes: list[float] = []
    rmses: list[float] = []
    for i in range(k):
        for j in range(i + 1, k):
            diffs = [
                abs(row[i] - row[j])
                for row in run_matrix
                if row[i] is not None and row[j] is not None
            ]
            if not diffs:
                continue
            maes.append(sum(diffs) / len(diffs))
            rmses.append(math.sqrt(sum(d * d for d in diffs) / len(diffs)))
    if not maes:
        raise MetricError("no run pair shares a scored response")
    return ConsistencyStats(
        mae_mean=sum(maes) / len(maes),
        mae_std=sample_std(maes),
        rmse_mean=sum(rmses) / len(rmses),
        rmse_std=sample_std(rmses),
        pair_count=len(maes),
    )


def krippendorff_alpha_ordinal(units: Sequence[Sequence[int | None]]) -> float:
    """Krippendorff's alpha with the ordinal difference function.

    ``units`` is units x raters with ``None`` for missing ratings; units with
    fewer than two ratings contribute no coincidences and are dropped. Uses
    the coincidence-matrix formulation: within a unit of m ratings each
    ordered pair adds 1/(m-1) to o[c][k]; the ordinal distance is
    delta^2(c,k) = (sum of marginal frequencies n_g for g between c and k,
    minus (n_c+n_k)/2) squared. alpha = 1 - D_o/D_e, defined as 1.0 when both
    disagreements are zero.
    """
    pairable = [ [v for v in unit if v is not None] for unit in units ]
    pairable = [unit for unit in pairable if len(unit) >= 2]
    if len(pairable) < 1 or sum(len(u) for u in pairable) < 2:
        raise MetricError("no pairable values: need units with >=2 ratings")
    values = sorted({v for unit in pairable for v in unit})
    index = {v: i for i, v in enumerate(values)}
    size = len(values)
    coincidence = [[0.0] * size for _ in range(size)]
    for unit in pairable:
        m = len(unit)
        for a in range(m):
            for b in range(m):
                if a == b:
                    continue
                coincidence[index[unit[a]]][index[unit[b]]] += 1.0 / (m - 1)
    margins = [sum(coincidence[i]) for i in range(size)]
    n_total = sum(margins)

    def delta_sq(ci: int, ki: int) -> float:
        lo, hi = min(ci, ki), max(ci, ki)
        between = sum(margins[g] for g in range(lo, hi + 1))
        return (between - (margins[ci] + margins[ki]) / 2.0) ** 2

    d_obs = 0.0
    d_exp = 0.0
    for c in range(size):
        for k in range(size):
            if c == k:
                continue
            d = delta_sq(c, k)
            d_obs += coincidence[c][k] * d
            d_exp += margins[c] * margins[k] * d
    d_obs /= n_total
    d_exp /= n_total * (n_total - 1)
    if d_exp == 0.0:
        return 1.0
    return 1.0 - d_obs / d_exp


@dataclass(frozen=True)
class CorrelationResult:
    trait_id: str
    r: float
    n: int


def trait_subtrait_correlation(corpus: Corpus, tree: SkillTree) -> list[CorrelationResult]:
    """Correlation between holistic trait scores and aggregated subtrait scores.

    Per trait and response: x is the mean of the two reads' trait score, y is
    the mean over the trait's subtraits of each subtrait's two-read mean.
    Requires both reads for every response; incomplete pairs are an error so
    silent attrition cannot skew the statistic.
    """
    pairs = corpus.read_pairs()
    results: list[CorrelationResult] = []
    for trait in tree.traits:
        xs: list[float] = []
        ys: list[float] = []
        for response_id in sorted(corpus.responses):
            pair = pairs.get(response_id, {})
            read1, read2 = pair.get(1), pair.get(2)
            if read1 is None or read2 is None:
                raise MetricError(f"response {response_id!r} lacks two reads")
            for read in (read1, read2):
                if trait.id not in read.trait_scores:
                    raise MetricError(f"read for {response_id!r} lacks trait {trait.id!r}")
                for sub in trait.subtraits:
                    if sub.id not in read.subtrait_scores:
                        raise MetricError(f"read for {response_id!r} lacks subtrait {sub.id!r}")
            xs.append((read1.trait_scores[trait.id] + read2.trait_scores[trait.id]) / 2.0)
            sub_means = [
                (read1.subtrait_scores[s.id] + read2.subtrait_scores[s.id]) / 2.0
                for s in trait.subtraits
            ]
            ys.append(sum(sub_means) / len(sub_means))
        results.append(CorrelationResult(trait_id=trait.id, r=pearson_r(xs, ys), n=len(xs)))
    return results


@dataclass(frozen=True)
class AgreementStats:
    qwk: float
    exact: float
    n: int


def agreement(a: Sequence[int], b: Sequence[int], scale: ScoreScale) -> AgreementStats:
    return AgreementStats(qwk=qwk(a, b, scale), exact=exact_agreement(a, b), n=len(a))
