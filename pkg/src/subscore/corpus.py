"""Pooled response corpus: item prompts, student responses, double-read annotations.

Records travel as JSON-lines, one object per line with a ``kind`` tag
(``item`` | ``response`` | ``read``). Character offsets everywhere count
Unicode scalar values, which is exactly Python string indexing.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .rubric import SkillTree


class IngestError(ValueError):
    """A corpus record that cannot be accepted; the message names the record."""


@dataclass(frozen=True)
class EvidenceSpan:
    """Character-offset region [start, end) of a response, with its text snapshot."""

    start: int
    end: int
    snapshot: str

    @classmethod
    def from_offsets(cls, text: str, start: int, end: int) -> "EvidenceSpan":
        check_span_bounds(text, start, end)
        return cls(start=start, end=end, snapshot=text[start:end])

    def matches(self, text: str) -> bool:
        return 0 <= self.start < self.end <= len(text) and text[self.start:self.end] == self.snapshot


def check_span_bounds(text: str, start: int, end: int) -> None:
    if not (0 <= start < end <= len(text)):
        raise ValueError(
            f"span [{start},{end}) out of bounds for response of length {len(text)}"
        )


@dataclass(frozen=True)
class ItemPrompt:
    id: str
    title: str
    stimulus: str
    passages: tuple[str, ...] = ()


@dataclass(frozen=True)
class StudentResponse:
    id: str
    item_id: str
    text: str


@dataclass(frozen=True)
class HumanRead:
    """One marker's complete scoring of one response.

    Reads are immutable once submitted; a correction is a new read with
    ``supersedes_prior`` set, and analyses use first-submitted reads unless
    configured otherwise.
    """

    response_id: str
    rater_id: str
    read_index: int  # 1 or 2
    trait_scores: Mapping[str, int]
    subtrait_scores: Mapping[str, int]
    evidence: Mapping[str, tuple[EvidenceSpan, ...]] = field(default_factory=dict)
    supersedes_prior: bool = False
    tree_version: str | None = None


@dataclass
class Corpus:
    items: dict[str, ItemPrompt]
    responses: dict[str, StudentResponse]
    reads: list[HumanRead]
    provenance: dict = field(default_factory=dict, compare=False)

    def counts(self) -> dict[str, int]:
        return {"items": len(self.items), "responses": len(self.responses), "reads": len(self.reads)}

    def response_text(self, response_id: str) -> str:
        return self.responses[response_id].text

    def effective_reads(self, include_corrections: bool = False) -> list[HumanRead]:
        """One read per (response, read_index): first submitted, or the latest correction."""
        chosen: dict[tuple[str, int], HumanRead] = {}
        for read in self.reads:
            key = (read.response_id, read.read_index)
            if key not in chosen or (include_corrections and read.supersedes_prior):
                chosen[key] = read
        return list(chosen.values())

    def read_pairs(self, include_corrections: bool = False) -> dict[str, dict[int, HumanRead]]:
        """response id -> {read_index: read} over effective reads."""
        out: dict[str, dict[int, HumanRead]] = {}
        for read in self.effective_reads(include_corrections):
            out.setdefault(read.response_id, {})[read.read_index] = read
        return out


# --- record (de)serialization -------------------------------------------------

def item_record(item: ItemPrompt) -> dict:
    return {
        "kind": "item",
        "id": item.id,
        "title": item.title,
        "stimulus": item.stimulus,
        "passages": list(item.passages),
    }


def response_record(response: StudentResponse) -> dict:
    return {"kind": "response", "id": response.id, "item_id": response.item_id, "text": response.text}


def read_record(read: HumanRead) -> dict:
    return {
        "kind": "read",
        "response_id": read.response_id,
        "rater_id": read.rater_id,
        "read_index": read.read_index,
        "trait_scores": {k: read.trait_scores[k] for k in sorted(read.trait_scores)},
        "subtrait_scores": {k: read.subtrait_scores[k] for k in sorted(read.subtrait_scores)},
        "evidence": {
            sid: [{"start": s.start, "end": s.end, "snapshot": s.snapshot} for s in spans]
            for sid, spans in sorted(read.evidence.items())
        },
        "supersedes_prior": read.supersedes_prior,
        "tree_version": read.tree_version,
    }


def corpus_records(corpus: Corpus) -> Iterator[dict]:
    for item in corpus.items.values():
        yield item_record(item)
    for response in corpus.responses.values():
        yield response_record(response)
    for read in corpus.reads:
        yield read_record(read)


def dump_corpus_lines(corpus: Corpus) -> str:
    return "".join(json.dumps(rec, ensure_ascii=False) + "\n" for rec in corpus_records(corpus))


def parse_corpus_lines(text: str) -> Iterator[dict]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {lineno}: not valid JSON: {exc}") from exc
        if not isinstance(record, dict) or "kind" not in record:
            raise IngestError(f"line {lineno}: record must be an object with a 'kind' field")
        yield record


# --- ingestion ---------------------------------------------------------------

def _str_field(record: dict, key: str, label: str, allow_empty: bool = False) -> str:
    value = record.get(key)
    if not isinstance(value, str) or (not allow_empty and not value):
        raise IngestError(f"{label}: field '{key}' must be a non-empty string")
    return value


def _score_map(record: dict, key: str, label: str) -> dict[str, int]:
    value = record.get(key)
    if not isinstance(value, dict):
        raise IngestError(f"{label}: field '{key}' must be a map of id to scorepoint")
    out: dict[str, int] = {}
    for k, v in value.items():
        if not isinstance(v, int) or isinstance(v, bool):
            raise IngestError(f"{label}: score for '{k}' must be an integer, got {v!r}")
        out[str(k)] = v
    return out


def _parse_read(record: dict, label: str) -> HumanRead:
    read_index = record.get("read_index")
    if read_index not in (1, 2):
        raise IngestError(f"{label}: read_index must be 1 or 2, got {read_index!r}")
    evidence_doc = record.get("evidence", {})
    if not isinstance(evidence_doc, dict):
        raise IngestError(f"{label}: evidence must map subtrait id to a span list")
    evidence: dict[str, tuple[EvidenceSpan, ...]] = {}
    for sid, spans_doc in evidence_doc.items():
        if not isinstance(spans_doc, list):
            raise IngestError(f"{label}: evidence for '{sid}' must be a list of spans")
        spans = []
        for span_doc in spans_doc:
            try:
                start, end = int(span_doc["start"]), int(span_doc["end"])
            except (KeyError, TypeError, ValueError) as exc:
                raise IngestError(f"{label}: span in '{sid}' needs integer start/end") from exc
            spans.append(EvidenceSpan(start=start, end=end, snapshot=span_doc.get("snapshot", "")))
        evidence[str(sid)] = tuple(spans)
    tree_version = record.get("tree_version")
    if tree_version is not None and not isinstance(tree_version, str):
        raise IngestError(f"{label}: tree_version must be a string when present")
    return HumanRead(
        response_id=_str_field(record, "response_id", label),
        rater_id=_str_field(record, "rater_id", label),
        read_index=read_index,
        trait_scores=_score_map(record, "trait_scores", label),
        subtrait_scores=_score_map(record, "subtrait_scores", label),
        evidence=evidence,
        supersedes_prior=bool(record.get("supersedes_prior", False)),
        tree_version=tree_version,
    )


def check_read_against_tree(read: HumanRead, tree: SkillTree, label: str = "read") -> None:
    """Completeness and scale checks for a submitted read: exactly the tree's
    traits and subtraits must be scored, every score inside its declared scale."""
    want_traits = set(tree.trait_ids())
    want_subs = set(tree.subtrait_ids())
    got_traits = set(read.trait_scores)
    got_subs = set(read.subtrait_scores)
    missing = sorted(want_traits - got_traits) + sorted(want_subs - got_subs)
    if missing:
        raise IngestError(f"{label}: missing scores for {missing}")
    extra = sorted(got_traits - want_traits) + sorted(got_subs - want_subs)
    if extra:
        raise IngestError(f"{label}: scores for unknown ids {extra}")
    for trait in tree.traits:
        score = read.trait_scores[trait.id]
        if not trait.scale.contains(score):
            raise IngestError(f"{label}: trait '{trait.id}' score {score} outside scale {trait.scale.label()}")
        for sub in trait.subtraits:
            score = read.subtrait_scores[sub.id]
            if not sub.scale.contains(score):
                raise IngestError(f"{label}: subtrait '{sub.id}' score {score} outside scale {sub.scale.label()}")
    for sid in read.evidence:
        if sid not in want_subs:
            raise IngestError(f"{label}: evidence for unknown subtrait '{sid}'")


def ingest_corpus(
    records: Iterable[dict],
    tree: SkillTree | None = None,
    provenance: dict | None = None,
) -> Corpus:
    """Build a Corpus from kind-tagged records, enforcing every invariant.

    Structural invariants (referential integrity, span bounds and snapshots,
    unique ids, unique (response, read_index)) are always enforced. Score
    completeness and scale checks additionally apply when ``tree`` is given.
    Raises :class:`IngestError` naming the offending record.
    """
    items: dict[str, ItemPrompt] = {}
    responses: dict[str, StudentResponse] = {}
    reads: list[HumanRead] = []
    seen_read_keys: set[tuple[str, int]] = set()

    for record in records:
        kind = record.get("kind")
        if kind == "item":
            label = f"item '{record.get('id')}'"
            item = ItemPrompt(
                id=_str_field(record, "id", label),
                title=_str_field(record, "title", label, allow_empty=True),
                stimulus=_str_field(record, "stimulus", label),
                passages=tuple(record.get("passages", []) or ()),
            )
            if item.id in items:
                raise IngestError(f"{label}: duplicate item id")
            items[item.id] = item
        elif kind == "response":
            label = f"response '{record.get('id')}'"
            response = StudentResponse(
                id=_str_field(record, "id", label),
                item_id=_str_field(record, "item_id", label),
                text=_str_field(record, "text", label),
            )
            if response.id in responses:
                raise IngestError(f"{label}: duplicate response id")
            if response.item_id not in items:
                raise IngestError(f"{label}: references unknown item '{response.item_id}'")
            responses[response.id] = response
        elif kind == "read":
            label = f"read ({record.get('response_id')!r}, read_index {record.get('read_index')!r})"
            read = _parse_read(record, label)
            if read.response_id not in responses:
                raise IngestError(f"{label}: references unknown response id '{read.response_id}'")
            key = (read.response_id, read.read_index)
            if not read.supersedes_prior:
                if key in seen_read_keys:
                    raise IngestError(f"{label}: duplicate (response, read_index)")
                seen_read_keys.add(key)
            elif key not in seen_read_keys:
                raise IngestError(f"{label}: supersedes a read that does not exist")
            text = responses[read.response_id].text
            evidence: dict[str, tuple[EvidenceSpan, ...]] = {}
            for sid, spans in read.evidence.items():
                fixed = []
                for span in spans:
                    try:
                        check_span_bounds(text, span.start, span.end)
                    except ValueError as exc:
                        raise IngestError(f"{label}: subtrait '{sid}' {exc}") from exc
                    actual = text[span.start:span.end]
                    if span.snapshot and span.snapshot != actual:
                        raise IngestError(
                            f"{label}: subtrait '{sid}' span [{span.start},{span.end}) snapshot "
                            f"does not match the response text"
                        )
                    fixed.append(EvidenceSpan(span.start, span.end, actual))
                evidence[sid] = tuple(fixed)
            read = HumanRead(
                response_id=read.response_id,
                rater_id=read.rater_id,
                read_index=read.read_index,
                trait_scores=read.trait_scores,
                subtrait_scores=read.subtrait_scores,
                evidence=evidence,
                supersedes_prior=read.supersedes_prior,
                tree_version=read.tree_version,
            )
            if tree is not None:
                check_read_against_tree(read, tree, label)
            reads.append(read)
        else:
            raise IngestError(f"record with unknown kind {kind!r}")

    return Corpus(items=items, responses=responses, reads=reads, provenance=dict(provenance or {}))


def order_responses(corpus: Corpus, mode: str = "pooled", seed: int = 0) -> list[str]:
    """Work order for markers: ``pooled`` is a seeded deterministic shuffle
    mixing items together; ``by_item`` keeps each item's responses contiguous."""
    if not corpus.responses:
        raise ValueError("corpus has no responses")
    ids = list(corpus.responses)
    if mode == "pooled":
        rng = random.Random(seed)
        rng.shuffle(ids)
        return ids
    if mode == "by_item":
        by_item: dict[str, list[str]] = {item_id: [] for item_id in corpus.items}
        for response in corpus.responses.values():
            by_item[response.item_id].append(response.id)
        return [rid for item_id in corpus.items for rid in by_item[item_id]]
    raise ValueError(f"unknown ordering mode {mode!r}")
