"""Brute-force reference implementations used to cross-check the fast metrics.

Each oracle evaluates its statistic straight from the definition (explicit
pair enumeration, no shared code with the library) so agreement between the
two is meaningful evidence of correctness.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence


def oracle_qwk(a: Sequence[int], b: Sequence[int], lo: int, hi: int) -> float:
    """Weighted kappa evaluated directly: 1 - sum(wO)/sum(wE)."""
    points = list(range(lo, hi + 1))
    n = len(a)
    span = (hi - lo) ** 2
    observed = {(i, j): 0 for i in points for j in points}
    for x, y in zip(a, b):
        observed[(x, y)] += 1
    row = {i: sum(observed[(i, j)] for j in points) for i in points}
    col = {j: sum(observed[(i, j)] for i in points) for j in points}
    num = 0.0
    den = 0.0
    for i in points:
        for j in points:
            w = (i - j) ** 2 / span
            num += w * observed[(i, j)]
            den += w * row[i] * col[j] / n
    if den == 0.0:
        return 1.0
    return 1.0 - num / den


def oracle_alpha_ordinal(units: Sequence[Sequence[int | None]]) -> float:
    """Krippendorff's ordinal alpha by explicit pair enumeration.

    Observed disagreement sums within-unit ordered pairs (each unit weighted
    by 1/(m-1)); expected disagreement sums ordered pairs over the pooled
    pairable values. O(n^2), fine at fixture scale.
    """
    pairable: list[list[int]] = []
    pooled: list[int] = []
    for unit in units:
        vals = [v for v in unit if v is not None]
        if len(vals) >= 2:
            pairable.append(vals)
            pooled.extend(vals)
    if not pooled:
        raise ValueError("no pairable values")
    n = len(pooled)
    count = Counter(pooled)
    values = sorted(count)

    def d2(a: int, b: int) -> float:
        lo, hi = (a, b) if a <= b else (b, a)
        between = sum(count[v] for v in values if lo <= v <= hi)
        return (between - (count[lo] + count[hi]) / 2) ** 2

    d_obs = 0.0
    for vals in pairable:
        m = len(vals)
        for i in range(m):
            for j in range(m):
                if i != j:
                    d_obs += d2(vals[i], vals[j]) / (m - 1)
    d_obs /= n

    d_exp = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                d_exp += d2(pooled[i], pooled[j])
    d_exp /= n * (n - 1)

    if d_exp == 0.0:
        return 1.0
    return 1.0 - d_obs / d_exp


def oracle_pairwise_deviation(matrix: Sequence[Sequence[int | None]]) -> tuple[list[float], list[float]]:
    """Per-pair MAE and RMSE lists over every unordered column pair."""
    n_runs = len(matrix[0])
    maes: list[float] = []
    rmses: list[float] = []
    for i in range(n_runs):
        for j in range(i + 1, n_runs):
            diffs = [
                abs(row[i] - row[j])
                for row in matrix
                if row[i] is not None and row[j] is not None
            ]
            if not diffs:
                continue
            maes.append(sum(diffs) / len(diffs))
            rmses.append(math.sqrt(sum(d * d for d in diffs) / len(diffs)))
    return maes, rmses


def oracle_pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    return sxy / math.sqrt(sxx * syy)


def oracle_mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (n-1); a single value gives 0.0."""
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)
