"""Deterministic report bundles: every evaluation table/figure as data + renderings.

The bundle is data-first: one JSON document carrying seven report families
(inter-rater reliability, trait-subtrait correlation, human-model agreement,
classification reports, run-consistency, confusion matrices, evidence
overlap) plus a configuration echo. Text tables and SVG grids are derived
from the same numbers. Identical inputs produce byte-identical files.

Human-model statistics pool every usable run: each ok run contributes one
(true, predicted) pair, so a response scored K times appears K times. The
averaged confusion matrices instead weight each response's runs by 1/K_ok so
every response contributes exactly one unit of mass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Corpus, HumanRead
from .evidence import SpanSet, aggregate_overlap, span_overlap_stats
from .metrics import (
    ConfusionMatrix,
    agreement,
    averaged_confusion,
    classification_report,
    confusion_counts,
    krippendorff_alpha_ordinal,
    pairwise_run_deviation,
    trait_subtrait_correlation,
    true_score,
)
from .rubric import ScoreScale, SkillTree
from .scoring import ScoringRun, group_runs


class ReportError(ValueError):
    """A requested table is missing inputs; the message names the gap."""


@dataclass(frozen=True)
class ReportConfig:
    y_true_policy: str = "first_read"
    zero_division_precision: float = 1.0
    seed: int | None = None
    runs_per_pair: int | None = None  # inferred from the runs when None
    provider: str = ""

    def __post_init__(self):
        if self.y_true_policy not in ("first_read", "rounded_average"):
            raise ReportError(f"unknown y_true policy {self.y_true_policy!r}")


def format_number(value: float, places: int = 3) -> str:
    """Fixed-point rendering with halves away from zero, e.g. 0.0625 -> '0.063'."""
    quant = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(quant, rounding=ROUND_HALF_UP))


def format_cell(value: float | None) -> str:
    if value is None:
        return "n/a"
    if value == int(value):
        return str(int(value))
    return format_number(value)


# --- bundle construction ------------------------------------------------------


def _read_pairs_or_gap(corpus: Corpus, table: str) -> dict[str, tuple[HumanRead, HumanRead]]:
    pairs = corpus.read_pairs()
    complete: dict[str, tuple[HumanRead, HumanRead]] = {}
    for response_id in sorted(corpus.responses):
        pair = pairs.get(response_id, {})
        read1, read2 = pair.get(1), pair.get(2)
        if read1 is None or read2 is None:
            raise ReportError(f"{table} table needs both reads for response {response_id!r}")
        complete[response_id] = (read1, read2)
    return complete


def _irr_rows(corpus: Corpus, tree: SkillTree) -> list[dict]:
    pairs = _read_pairs_or_gap(corpus, "irr")
    ordered_ids = sorted(pairs)
    rows: list[dict] = []
    for trait in tree.traits:
        a = [pairs[rid][0].trait_scores[trait.id] for rid in ordered_ids]
        b = [pairs[rid][1].trait_scores[trait.id] for rid in ordered_ids]
        stats = agreement(a, b, trait.scale)
        rows.append(
            {"kind": "trait", "id": trait.id, "name": trait.name, "qwk": stats.qwk, "exact": stats.exact, "n": stats.n}
        )
        for sub in trait.subtraits:
            a = [pairs[rid][0].subtrait_scores[sub.id] for rid in ordered_ids]
            b = [pairs[rid][1].subtrait_scores[sub.id] for rid in ordered_ids]
            stats = agreement(a, b, sub.scale)
            rows.append(
                {"kind": "subtrait", "id": sub.id, "name": sub.name, "qwk": stats.qwk, "exact": stats.exact, "n": stats.n}
            )
    return rows


def _correlation_rows(corpus: Corpus, tree: SkillTree) -> list[dict]:
    results = trait_subtrait_correlation(corpus, tree)
    return [
        {"trait_id": r.trait_id, "name": tree.trait(r.trait_id).name, "r": r.r, "n": r.n}
        for r in results
    ]


def _true_scores(
    pairs: Mapping[str, tuple[HumanRead, HumanRead]],
    subtrait_id: str,
    policy: str,
) -> dict[str, int]:
    return {
        rid: true_score(pair[0].subtrait_scores[subtrait_id], pair[1].subtrait_scores[subtrait_id], policy)
        for rid, pair in pairs.items()
    }


def _run_matrix(
    grouped: Mapping[tuple[str, str], "object"],
    subtrait_id: str,
    response_ids: Sequence[str],
    k: int,
) -> list[list[int | None]]:
    matrix: list[list[int | None]] = []
    for rid in response_ids:
        summary = grouped.get((rid, subtrait_id))
        if summary is None:
            raise ReportError(f"consistency table needs runs for response {rid!r}, subtrait {subtrait_id!r}")
        row: list[int | None] = [None] * k
        for run in summary.runs:
            row[run.run_index] = run.score if run.ok else None
        matrix.append(row)
    return matrix


def build_bundle(
    corpus: Corpus,
    runs: Sequence[ScoringRun],
    tree: SkillTree,
    config: ReportConfig | None = None,
) -> dict:
    """Assemble all seven report families into one JSON-ready dict.

    Raises ReportError naming the first missing input (a response without
    both reads, a (response, subtrait) pair without runs, or a response whose
    runs all failed).
    """
    config = config or ReportConfig()
    grouped = group_runs(runs)
    pairs = _read_pairs_or_gap(corpus, "human_model")
    ordered_ids = sorted(corpus.responses)
    subtrait_list = tree.subtrait_pairs()

    k = config.runs_per_pair
    if k is None:
        k = max((len(s.runs) for s in grouped.values()), default=0)
    if k < 1:
        raise ReportError("human_model table needs at least one scoring run")
    for rid in ordered_ids:
        for _, sub in subtrait_list:
            if (rid, sub.id) not in grouped:
                raise ReportError(f"human_model table needs runs for response {rid!r}, subtrait {sub.id!r}")

    human_model_rows: list[dict] = []
    classification_per_subtrait: dict[str, dict] = {}
    consistency_rows: list[dict] = []
    confusion_model: list[dict] = []
    overlap_rows: list[dict] = []

    for trait, sub in subtrait_list:
        y_true = _true_scores(pairs, sub.id, config.y_true_policy)

        pooled_true: list[int] = []
        pooled_pred: list[int] = []
        per_response_ok: list[list[int]] = []
        for rid in ordered_ids:
            summary = grouped[(rid, sub.id)]
            ok_scores = summary.ok_scores
            if not ok_scores:
                raise ReportError(
                    f"confusion table needs at least one usable run for response {rid!r}, subtrait {sub.id!r}"
                )
            per_response_ok.append(ok_scores)
            pooled_true.extend([y_true[rid]] * len(ok_scores))
            pooled_pred.extend(ok_scores)

        stats = agreement(pooled_true, pooled_pred, sub.scale)
        human_model_rows.append(
            {
                "subtrait_id": sub.id,
                "name": sub.name,
                "trait_id": trait.id,
                "qwk": stats.qwk,
                "exact": stats.exact,
                "n_pairs": stats.n,
            }
        )
        report = classification_report(
            pooled_true, pooled_pred, sub.scale, zero_division_precision=config.zero_division_precision
        )
        classification_per_subtrait[sub.id] = report.as_dict()

        matrix = _run_matrix(grouped, sub.id, ordered_ids, k)
        if k >= 2:
            deviation = pairwise_run_deviation(matrix)
            alpha = krippendorff_alpha_ordinal(matrix)
            consistency_rows.append(
                {
                    "subtrait_id": sub.id,
                    "name": sub.name,
                    "mae_mean": deviation.mae_mean,
                    "mae_std": deviation.mae_std,
                    "rmse_mean": deviation.rmse_mean,
                    "rmse_std": deviation.rmse_std,
                    "alpha": alpha,
                    "pair_count": deviation.pair_count,
                }
            )

        true_vec = [y_true[rid] for rid in ordered_ids]
        avg = averaged_confusion(true_vec, per_response_ok, sub.scale)
        confusion_model.append(_confusion_dict(sub.id, sub.name, "human_model", avg))

        per_response_overlap = []
        for rid in ordered_ids:
            read1, read2 = pairs[rid]
            human_spans = tuple(read1.evidence.get(sub.id, ()) ) + tuple(read2.evidence.get(sub.id, ()))
            model_spans = tuple(grouped[(rid, sub.id)].merged_spans())
            h = SpanSet(response_id=rid, subtrait_id=sub.id, source="human", spans=tuple(human_spans))
            m = SpanSet(response_id=rid, subtrait_id=sub.id, source="model", spans=model_spans)
            per_response_overlap.append(span_overlap_stats(h, m))
        agg = aggregate_overlap(sub.id, per_response_overlap)
        overlap_rows.append(
            {
                "subtrait_id": sub.id,
                "name": sub.name,
                "n": agg.n,
                "mean_jaccard": agg.mean_jaccard,
                "mean_coverage": agg.mean_coverage,
                "mean_overproduction": agg.mean_overproduction,
                "empty_human_count": agg.empty_human_count,
            }
        )

    confusion_human: list[dict] = []
    for trait in tree.traits:
        a = [pairs[rid][0].trait_scores[trait.id] for rid in ordered_ids]
        b = [pairs[rid][1].trait_scores[trait.id] for rid in ordered_ids]
        confusion_human.append(_confusion_dict(trait.id, trait.name, "human_human", _counts(a, b, trait.scale)))
        for sub in trait.subtraits:
            a = [pairs[rid][0].subtrait_scores[sub.id] for rid in ordered_ids]
            b = [pairs[rid][1].subtrait_scores[sub.id] for rid in ordered_ids]
            confusion_human.append(_confusion_dict(sub.id, sub.name, "human_human", _counts(a, b, sub.scale)))

    counts = corpus.counts()
    return {
        "config": {
            "y_true_policy": config.y_true_policy,
            "zero_division_precision": config.zero_division_precision,
            "seed": config.seed,
            "runs_per_pair": k,
            "provider": config.provider,
            "tree_version": tree.version,
            "std_flavor": "sample (n-1); a single pair reports 0.0",
            "counts": {
                "items": counts["items"],
                "responses": counts["responses"],
                "reads": counts["reads"],
                "runs": len(runs),
            },
        },
        "irr": {"rows": _irr_rows(corpus, tree)},
        "correlation": {"rows": _correlation_rows(corpus, tree)},
        "human_model": {"y_true_policy": config.y_true_policy, "rows": human_model_rows},
        "classification": {
            "y_true_policy": config.y_true_policy,
            "zero_division_precision": config.zero_division_precision,
            "per_subtrait": classification_per_subtrait,
        },
        "consistency": {"rows": consistency_rows, "std_flavor": "sample (n-1)"},
        "confusion": {"human_human": confusion_human, "human_model": confusion_model},
        "overlap": {"rows": overlap_rows},
    }


def _counts(a: Sequence[int], b: Sequence[int], scale: ScoreScale) -> ConfusionMatrix:
    return confusion_counts(a, b, scale)


def _confusion_dict(ident: str, name: str, kind: str, matrix: ConfusionMatrix) -> dict:
    return {
        "id": ident,
        "name": name,
        "kind": kind,
        "labels": list(matrix.scale.points()),
        "cells": [list(row) for row in matrix.cells],
    }


# --- text renderings ----------------------------------------------------------


def _render_table(headers: list[str], rows: list[list[str]], title: str) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [title, ""]
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip())
    lines.append("  ".join("-" * widths[i] for i in range(len(headers))))
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def render_irr_table(bundle: dict) -> str:
    rows = []
    for row in bundle["irr"]["rows"]:
        label = row["name"] if row["kind"] == "trait" else "  " + row["name"]
        rows.append([label, format_number(row["qwk"]), format_number(row["exact"]), str(row["n"])])
    return _render_table(["Trait / Subtrait", "QWK", "Exact", "N"], rows, "Inter-rater reliability (read 1 vs read 2)")


def render_correlation_table(bundle: dict) -> str:
    rows = [[row["name"], format_number(row["r"]), str(row["n"])] for row in bundle["correlation"]["rows"]]
    return _render_table(["Trait", "r", "N"], rows, "Trait-subtrait correlation (two-read means)")


def render_human_model_table(bundle: dict) -> str:
    rows = [
        [row["name"], format_number(row["qwk"]), format_number(row["exact"]), str(row["n_pairs"])]
        for row in bundle["human_model"]["rows"]
    ]
    title = f"Human-model agreement (y_true = {bundle['human_model']['y_true_policy']}, all runs pooled)"
    return _render_table(["Subtrait", "QWK", "Exact", "N pairs"], rows, title)


def render_classification_tables(bundle: dict) -> str:
    blocks = []
    by_subtrait = bundle["classification"]["per_subtrait"]
    names = {row["subtrait_id"]: row["name"] for row in bundle["human_model"]["rows"]}
    for sid, report in by_subtrait.items():
        rows = []
        for sp, cells in report["rows"].items():
            rows.append(
                [
                    f"SP{sp}",
                    format_number(cells["precision"]),
                    format_number(cells["recall"]),
                    format_number(cells["f1"]),
                    str(cells["support"]),
                ]
            )
        macro = report["macro"]
        rows.append(
            [
                "avg",
                format_number(macro["precision"]),
                format_number(macro["recall"]),
                format_number(macro["f1"]),
                str(macro["support"]),
            ]
        )
        blocks.append(
            _render_table(
                ["Scorepoint", "Precision", "Recall", "F1", "Support"],
                rows,
                f"Classification report: {names.get(sid, sid)}",
            )
        )
    return "\n".join(blocks)


def render_consistency_table(bundle: dict) -> str:
    rows = []
    for row in bundle["consistency"]["rows"]:
        rows.append(
            [
                row["name"],
                f"{format_number(row['mae_mean'])} ± {format_number(row['mae_std'])}",
                f"{format_number(row['rmse_mean'])} ± {format_number(row['rmse_std'])}",
                format_number(row["alpha"]),
            ]
        )
    return _render_table(
        ["Subtrait", "MAE (mean ± std)", "RMSE (mean ± std)", "Alpha"],
        rows,
        "Run-to-run consistency across run pairs",
    )


def render_overlap_table(bundle: dict) -> str:
    rows = []
    for row in bundle["overlap"]["rows"]:
        over = row["mean_overproduction"]
        rows.append(
            [
                row["name"],
                format_number(row["mean_jaccard"]),
                format_number(row["mean_coverage"]),
                "n/a" if over is None else format_number(over),
                str(row["empty_human_count"]),
                str(row["n"]),
            ]
        )
    return _render_table(
        ["Subtrait", "Jaccard", "Coverage", "Overproduction", "Human-empty", "N"],
        rows,
        "Evidence span overlap (human vs model, merged spans)",
    )


# --- SVG confusion grids ------------------------------------------------------

_CELL = 64
_MARGIN = 56


def _shade(value: float, peak: float) -> str:
    """White-to-steel-blue ramp; deterministic integer arithmetic."""
    if peak <= 0:
        return "#ffffff"
    ratio = max(0.0, min(1.0, value / peak))
    r = round(255 + (31 - 255) * ratio)
    g = round(255 + (119 - 255) * ratio)
    b = round(255 + (180 - 255) * ratio)
    return f"#{r:02x}{g:02x}{b:02x}"


def render_confusion_svg(entry: dict) -> str:
    """One confusion matrix as a labeled SVG grid (true rows, predicted cols)."""
    labels = entry["labels"]
    cells = entry["cells"]
    size = len(labels)
    width = _MARGIN + size * _CELL + 16
    height = _MARGIN + size * _CELL + 40
    peak = max((c for row in cells for c in row), default=0.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<title>{entry["name"]} ({entry["kind"]})</title>',
        f'<text x="{_MARGIN}" y="16" font-size="13">{entry["name"]} (rows: true, cols: predicted)</text>',
    ]
    for j, label in enumerate(labels):
        x = _MARGIN + j * _CELL + _CELL // 2
        parts.append(f'<text x="{x}" y="{_MARGIN - 10}" text-anchor="middle">SP{label}</text>')
    for i, label in enumerate(labels):
        y = _MARGIN + i * _CELL + _CELL // 2 + 4
        parts.append(f'<text x="{_MARGIN - 10}" y="{y}" text-anchor="end">SP{label}</text>')
    for i in range(size):
        for j in range(size):
            value = cells[i][j]
            x = _MARGIN + j * _CELL
            y = _MARGIN + i * _CELL
            parts.append(
                f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" '
                f'fill="{_shade(value, peak)}" stroke="#333333" stroke-width="1"/>'
            )
            dark = peak > 0 and value / peak > 0.55
            color = "#ffffff" if dark else "#111111"
            parts.append(
                f'<text x="{x + _CELL // 2}" y="{y + _CELL // 2 + 4}" text-anchor="middle" '
                f'fill="{color}">{format_cell(value)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- bundle emission ----------------------------------------------------------


def bundle_to_json(bundle: dict) -> str:
    return json.dumps(bundle, indent=2, ensure_ascii=False) + "\n"


def emit_reports(
    corpus: Corpus,
    runs: Sequence[ScoringRun],
    tree: SkillTree,
    config: ReportConfig,
    out_dir: str | Path,
) -> dict:
    """Build the bundle and write every artifact under ``out_dir``.

    Layout: ``reports.json`` (full bundle), ``tables/*.txt`` (plain-text
    renderings), ``confusion/*.svg`` (grids). Byte-identical across runs with
    identical inputs.
    """
    bundle = build_bundle(corpus, runs, tree, config)
    out = Path(out_dir)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    (out / "confusion").mkdir(parents=True, exist_ok=True)
    (out / "reports.json").write_text(bundle_to_json(bundle), encoding="utf-8")
    tables = {
        "irr.txt": render_irr_table(bundle),
        "correlation.txt": render_correlation_table(bundle),
        "human_model.txt": render_human_model_table(bundle),
        "classification.txt": render_classification_tables(bundle),
        "consistency.txt": render_consistency_table(bundle),
        "overlap.txt": render_overlap_table(bundle),
    }
    for filename, text in tables.items():
        (out / "tables" / filename).write_text(text, encoding="utf-8")
    for entry in bundle["confusion"]["human_human"]:
        path = out / "confusion" / f"human_{entry['id']}.svg"
        path.write_text(render_confusion_svg(entry), encoding="utf-8")
    for entry in bundle["confusion"]["human_model"]:
        path = out / "confusion" / f"model_{entry['id']}.svg"
        path.write_text(render_confusion_svg(entry), encoding="utf-8")
    return bundle
