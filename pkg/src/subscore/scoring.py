"""Subtrait scoring pipeline: prompt assembly, output parsing, grounding.

Each (response, subtrait) pair is scored in K independent runs. A run ends in
one of three statuses: ``ok`` (integer score on the subtrait scale),
``out_of_scale`` (integer outside the scale, kept for audit, excluded from
score aggregation), or ``malformed`` (unusable output or provider failure).
Malformed model output earns exactly one re-ask before being recorded.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Corpus, EvidenceSpan, ItemPrompt, StudentResponse
from .gateway import AuthenticationError, ChatRequest, Gateway, GatewayError
from .rubric import SkillTree, SubtraitDef

OUTPUT_SCHEMA_BLOCK = (
    "Respond with a single JSON object and nothing else:\n"
    '{"score": <integer>, "evidence": [<verbatim quotes from the response>]}\n'
    "Quote evidence exactly as it appears in the response, character for character.\n"
    "Give an empty evidence list only when nothing in the response supports the score."
)


def fence(text: str) -> str:
    """Wrap text in a backtick fence longer than any backtick run inside it.

    Keeps response text verbatim inside prompts without escaping: the fence
    simply outgrows whatever backtick runs the text contains.
    """
    longest = 0
    run = 0
    for ch in text:
        if ch == "`":
            run += 1
            longest = max(longest, run)
        else:
            run = 0
    ticks = "`" * max(3, longest + 1)
    return f"{ticks}\n{text}\n{ticks}"


class TemplateError(ValueError):
    """A prompt template dropped required content or exceeded its budget."""


@dataclass(frozen=True)
class PromptSettings:
    """Decoding and rendering knobs for scoring prompts."""

    temperature: float = 1.0
    seed: int | None = None
    max_output_tokens: int = 1024
    include_stimulus: bool = True
    user_template: str | None = None  # custom template with {placeholders}
    template_id: str = "default-v1"
    max_prompt_chars: int | None = None  # provider context budget, in characters


@dataclass(frozen=True)
class RenderedPrompt:
    """A fully rendered prompt for one (response, subtrait) pair."""

    subtrait_id: str
    template_id: str
    system_text: str
    user_text: str


DEFAULT_SYSTEM_TEXT = (
    "You are an experienced writing assessor. Score one narrowly defined "
    "aspect of a student response against the level descriptors you are "
    "given, and quote the passages that justify the score."
)

DEFAULT_USER_TEMPLATE = (
    "Aspect to score: {subtrait_name}\n"
    "{subtrait_description}\n"
    "\n"
    "Score levels ({scale_min}..{scale_max}):\n"
    "{rubric_levels}\n"
    "{standards_line}"
    "\n"
    "Writing prompt: {item_title}\n"
    "{context_blocks}"
    "\n"
    "Student response:\n"
    "{response_block}\n"
    "\n"
    "{output_schema}"
)


def build_prompt(
    item: ItemPrompt,
    response: StudentResponse,
    subtrait: SubtraitDef,
    settings: PromptSettings | None = None,
) -> RenderedPrompt:
    """Render the scoring prompt, a pure function of its inputs.

    The rendering must carry every rubric descriptor, the subtrait
    description, the response text verbatim, and the output-schema block;
    a custom template that drops any of these is rejected.
    """
    settings = settings or PromptSettings()
    rubric_levels = "\n".join(
        f"  {level}: {descriptor}"
        for level, descriptor in zip(subtrait.scale.points(), subtrait.rubric)
    )
    standards_line = ""
    if subtrait.standards:
        standards_line = "Aligned standards: " + ", ".join(subtrait.standards) + "\n"
    context_blocks = ""
    if settings.include_stimulus and item.stimulus:
        context_blocks += fence(item.stimulus) + "\n"
    for passage in item.passages:
        context_blocks += fence(passage) + "\n"
    template = settings.user_template or DEFAULT_USER_TEMPLATE
    try:
        user_text = template.format(
            subtrait_name=subtrait.name,
            subtrait_description=subtrait.description,
            scale_min=subtrait.scale.min,
            scale_max=subtrait.scale.max,
            rubric_levels=rubric_levels,
            item_title=item.title,
            context_blocks=context_blocks,
            response_block=fence(response.text),
            standards_line=standards_line,
            output_schema=OUTPUT_SCHEMA_BLOCK,
        )
    except (KeyError, IndexError) as exc:
        raise TemplateError(f"template references unknown placeholder: {exc}") from exc
    required = list(subtrait.rubric) + [subtrait.description, response.text, OUTPUT_SCHEMA_BLOCK]
    for piece in required:
        if piece and piece not in user_text:
            raise TemplateError(f"template omits required content: {piece[:60]!r}")
    if settings.max_prompt_chars is not None and len(user_text) > settings.max_prompt_chars:
        raise TemplateError(
            f"rendered prompt is {len(user_text)} chars, over the {settings.max_prompt_chars} budget"
        )
    return RenderedPrompt(
        subtrait_id=subtrait.id,
        template_id=settings.template_id,
        system_text=DEFAULT_SYSTEM_TEXT,
        user_text=user_text,
    )


@dataclass(frozen=True)
class ParseResult:
    status: str  # ok | malformed | out_of_scale
    score: int | None = None
    evidence: tuple[str, ...] = ()
    detail: str = ""


def _strip_fence(text: str) -> str:
    stripped = text.strip()
    if not stripped.startswith("```"):
        return stripped
    lines = stripped.splitlines()
    if len(lines) >= 2 and lines[-1].strip().startswith("```"):
        return "\n".join(lines[1:-1]).strip()
    return stripped


def parse_model_output(text: str, scale) -> ParseResult:
    """Parse one model completion against the canonical output shape."""
    body = _strip_fence(text)
    try:
        payload = json.loads(body)
    except (json.JSONDecodeError, ValueError) as exc:
        return ParseResult("malformed", detail=f"not JSON: {exc}")
    if not isinstance(payload, dict):
        return ParseResult("malformed", detail="top level is not an object")
    if set(payload) != {"score", "evidence"}:
        return ParseResult("malformed", detail=f"unexpected keys {sorted(payload)}")
    score = payload["score"]
    if isinstance(score, bool) or not isinstance(score, int):
        return ParseResult("malformed", detail=f"score is not an integer: {score!r}")
    evidence = payload["evidence"]
    if not isinstance(evidence, list) or any(not isinstance(e, str) for e in evidence):
        return ParseResult("malformed", detail="evidence is not a list of strings")
    if not scale.contains(score):
        return ParseResult("out_of_scale", score=score, evidence=tuple(evidence), detail=f"score {score} outside {scale.min}..{scale.max}")
    return ParseResult("ok", score=score, evidence=tuple(evidence))


# --- evidence grounding ------------------------------------------------------

GROUND_EXACT = "exact"
GROUND_NORMALIZED = "normalized"
GROUND_UNGROUNDED = "ungrounded"


def _fold_with_offsets(text: str) -> tuple[str, list[tuple[int, int]]]:
    """Casefold + collapse whitespace, tracking original offsets per char.

    Whitespace runs collapse to one space carrying the run's span. Casefold
    can expand one char to several; every expansion char keeps the source
    char's (start, end) so matches map back to original offsets.
    """
    folded: list[str] = []
    spans: list[tuple[int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            j = i
            while j < n and text[j].isspace():
                j += 1
            if folded and folded[-1] != " ":
                folded.append(" ")
                spans.append((i, j))
            i = j
            continue
        for fch in ch.casefold():
            folded.append(fch)
            spans.append((i, i + 1))
        i += 1
    # Trim a trailing collapsed space.
    if folded and folded[-1] == " ":
        folded.pop()
        spans.pop()
    return "".join(folded), spans


def ground_quote(quote: str, text: str) -> tuple[str, EvidenceSpan | None]:
    """Locate a quoted string in the response text.

    Tier 1: exact substring (first occurrence). Tier 2: whitespace-collapsed
    casefolded match, mapped back to original offsets. Tier 3: ungrounded.
    Offsets count Unicode scalar values.
    """
    if quote:
        idx = text.find(quote)
        if idx >= 0:
            return GROUND_EXACT, EvidenceSpan(idx, idx + len(quote), quote)
        folded_text, spans = _fold_with_offsets(text)
        folded_quote, _ = _fold_with_offsets(quote)
        if folded_quote:
            fidx = folded_text.find(folded_quote)
            if fidx >= 0:
                start = spans[fidx][0]
                end = spans[fidx + len(folded_quote) - 1][1]
                return GROUND_NORMALIZED, EvidenceSpan(start, end, text[start:end])
    return GROUND_UNGROUNDED, None


@dataclass(frozen=True)
class GroundedQuote:
    quote: str
    tier: str
    span: EvidenceSpan | None


@dataclass(frozen=True)
class ScoringRun:
    """One model run for one (response, subtrait) pair.

    ``status`` is ok | malformed | out_of_scale; ``score`` is present iff the
    status is ok (an out-of-scale integer is kept in ``detail``/``raw_text``
    for audit but carries no usable score).
    """

    response_id: str
    subtrait_id: str
    run_index: int
    status: str
    score: int | None = None
    evidence: tuple[GroundedQuote, ...] = ()
    raw_text: str = ""
    detail: str = ""
    attempt_count: int = 0
    latency: float = 0.0

    def __post_init__(self):
        if (self.score is not None) != (self.status == "ok"):
            raise ValueError(f"score must be present exactly when status is ok ({self.status}, {self.score})")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def raw_evidence(self) -> list[str]:
        return [g.quote for g in self.evidence]

    @property
    def grounded(self) -> list[EvidenceSpan]:
        return [g.span for g in self.evidence if g.span is not None]

    @property
    def ungrounded(self) -> list[str]:
        return [g.quote for g in self.evidence if g.span is None]

    def grounded_spans(self) -> list[EvidenceSpan]:
        return self.grounded


def run_record(run: ScoringRun) -> dict:
    return {
        "kind": "run",
        "response_id": run.response_id,
        "subtrait_id": run.subtrait_id,
        "run_index": run.run_index,
        "status": run.status,
        "score": run.score,
        "evidence": [
            {
                "quote": g.quote,
                "tier": g.tier,
                "span": None if g.span is None else {"start": g.span.start, "end": g.span.end, "snapshot": g.span.snapshot},
            }
            for g in run.evidence
        ],
        "raw_text": run.raw_text,
        "detail": run.detail,
        "attempt_count": run.attempt_count,
        "latency": round(run.latency, 6),
    }


def run_from_record(record: Mapping) -> ScoringRun:
    evidence = []
    for entry in record.get("evidence", []):
        span = entry.get("span")
        evidence.append(
            GroundedQuote(
                quote=entry["quote"],
                tier=entry["tier"],
                span=None if span is None else EvidenceSpan(span["start"], span["end"], span.get("snapshot", "")),
            )
        )
    return ScoringRun(
        response_id=record["response_id"],
        subtrait_id=record["subtrait_id"],
        run_index=record["run_index"],
        status=record["status"],
        score=record.get("score"),
        evidence=tuple(evidence),
        raw_text=record.get("raw_text", ""),
        detail=record.get("detail", ""),
        attempt_count=record.get("attempt_count", 0),
        latency=record.get("latency", 0.0),
    )


# --- batch scoring -----------------------------------------------------------


def score_one(
    gateway: Gateway,
    item: ItemPrompt,
    response: StudentResponse,
    subtrait: SubtraitDef,
    run_index: int,
    settings: PromptSettings | None = None,
) -> ScoringRun:
    """Score one (response, subtrait) run, with one re-ask on malformed output."""
    settings = settings or PromptSettings()
    prompt = build_prompt(item, response, subtrait, settings)
    request = ChatRequest(
        system_text=prompt.system_text,
        user_text=prompt.user_text,
        temperature=settings.temperature,
        seed=settings.seed,
        max_output_tokens=settings.max_output_tokens,
        metadata={
            "response_id": response.id,
            "subtrait_id": subtrait.id,
            "run_index": run_index,
        },
    )
    attempts = 0
    latency = 0.0
    raw = ""
    parsed = ParseResult("malformed", detail="not attempted")
    for _ in range(2):  # initial ask plus at most one re-ask
        try:
            result = gateway.complete(request)
        except AuthenticationError:
            # A bad credential fails every run identically; abort the batch
            # instead of burning it into thousands of malformed records.
            raise
        except GatewayError as exc:
            return ScoringRun(
                response_id=response.id,
                subtrait_id=subtrait.id,
                run_index=run_index,
                status="malformed",
                raw_text=raw,
                detail=f"provider failure: {exc}",
                attempt_count=attempts,
                latency=latency,
            )
        attempts += result.attempt_count
        latency += result.latency
        raw = result.text
        parsed = parse_model_output(raw, subtrait.scale)
        if parsed.status != "malformed":
            break
    evidence = tuple(
        GroundedQuote(quote=q, tier=tier, span=span)
        for q, (tier, span) in ((q, ground_quote(q, response.text)) for q in parsed.evidence)
    )
    return ScoringRun(
        response_id=response.id,
        subtrait_id=subtrait.id,
        run_index=run_index,
        status=parsed.status,
        score=parsed.score if parsed.status == "ok" else None,
        evidence=evidence,
        raw_text=raw,
        detail=parsed.detail,
        attempt_count=attempts,
        latency=latency,
    )


def score_batch(
    gateway: Gateway,
    corpus: Corpus,
    tree: SkillTree,
    runs_per_pair: int = 1,
    settings: PromptSettings | None = None,
    response_ids: Sequence[str] | None = None,
    subtrait_ids: Sequence[str] | None = None,
    workers: int = 4,
    progress: Callable[[ScoringRun], None] | None = None,
) -> list[ScoringRun]:
    """Score every requested (response, subtrait, run) and return runs sorted.

    Output order is deterministic, (response_id, subtrait_id, run_index),
    regardless of worker interleaving. Run indices are contiguous from 0.
    """
    if runs_per_pair < 1:
        raise ValueError("runs_per_pair must be >= 1")
    wanted_responses = list(response_ids) if response_ids is not None else sorted(corpus.responses)
    for rid in wanted_responses:
        if rid not in corpus.responses:
            raise KeyError(f"unknown response id {rid!r}")
    subtraits = list(tree.subtraits())
    if subtrait_ids is not None:
        by_id = {s.id: s for s in subtraits}
        missing = [sid for sid in subtrait_ids if sid not in by_id]
        if missing:
            raise KeyError(f"unknown subtrait ids {missing}")
        subtraits = [by_id[sid] for sid in subtrait_ids]

    tasks = []
    for rid in wanted_responses:
        response = corpus.responses[rid]
        item = corpus.items[response.item_id]
        for subtrait in subtraits:
            for k in range(runs_per_pair):
                tasks.append((item, response, subtrait, k))

    results: list[ScoringRun] = []
    if workers <= 1:
        for item, response, subtrait, k in tasks:
            run = score_one(gateway, item, response, subtrait, k, settings)
            results.append(run)
            if progress:
                progress(run)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(score_one, gateway, item, response, subtrait, k, settings)
                for item, response, subtrait, k in tasks
            ]
            for future in futures:
                run = future.result()
                results.append(run)
                if progress:
                    progress(run)
    results.sort(key=lambda r: (r.response_id, r.subtrait_id, r.run_index))
    return results


# --- aggregation over runs ---------------------------------------------------


@dataclass(frozen=True)
class PairSummary:
    """All runs for one (response, subtrait) pair, with status tallies."""

    response_id: str
    subtrait_id: str
    runs: tuple[ScoringRun, ...]

    @property
    def ok_scores(self) -> list[int]:
        return [r.score for r in self.runs if r.ok and r.score is not None]

    @property
    def status_counts(self) -> dict[str, int]:
        counts = {"ok": 0, "malformed": 0, "out_of_scale": 0}
        for r in self.runs:
            counts[r.status] = counts.get(r.status, 0) + 1
        return counts

    def modal_score(self) -> int | None:
        """Most frequent ok score; ties break toward the lower score."""
        scores = self.ok_scores
        if not scores:
            return None
        tally: dict[int, int] = {}
        for s in scores:
            tally[s] = tally.get(s, 0) + 1
        best = max(tally.items(), key=lambda kv: (kv[1], -kv[0]))
        return best[0]

    def merged_spans(self) -> list[EvidenceSpan]:
        spans: list[EvidenceSpan] = []
        for r in self.runs:
            if r.ok:
                spans.extend(r.grounded_spans())
        return spans


def group_runs(runs: Iterable[ScoringRun]) -> dict[tuple[str, str], PairSummary]:
    buckets: dict[tuple[str, str], list[ScoringRun]] = {}
    for run in runs:
        buckets.setdefault((run.response_id, run.subtrait_id), []).append(run)
    out: dict[tuple[str, str], PairSummary] = {}
    for key, bucket in buckets.items():
        bucket.sort(key=lambda r: r.run_index)
        indices = [r.run_index for r in bucket]
        if indices != list(range(len(bucket))):
            raise ValueError(f"run indices for {key} are not contiguous from 0: {indices}")
        out[key] = PairSummary(response_id=key[0], subtrait_id=key[1], runs=tuple(bucket))
    return out
