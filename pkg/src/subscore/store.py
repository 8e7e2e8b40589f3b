"""Single-directory corpus store with append-only read submissions.

Layout: ``corpus.jsonl`` (items + responses, written at ingest),
``reads.jsonl`` (append-only annotation audit trail), ``runs.jsonl``
(scoring runs), ``meta.json`` (provenance). Writes are serialized by a
process-local lock; pure queries reload from disk and are safe concurrently.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .corpus import (
    Corpus,
    HumanRead,
    IngestError,
    check_read_against_tree,
    check_span_bounds,
    dump_corpus_lines,
    ingest_corpus,
    item_record,
    parse_corpus_lines,
    read_record,
    response_record,
    EvidenceSpan,
)
from .rubric import SkillTree
from .scoring import ScoringRun, run_record, run_from_record


class StoreError(RuntimeError):
    pass


class CorpusStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus.jsonl"

    @property
    def reads_path(self) -> Path:
        return self.root / "reads.jsonl"

    @property
    def runs_path(self) -> Path:
        return self.root / "runs.jsonl"

    @property
    def meta_path(self) -> Path:
        return self.root / "meta.json"

    def exists(self) -> bool:
        return self.corpus_path.exists()

    # --- ingest / load --------------------------------------------------

    def ingest(self, corpus_file: str | Path, tree: SkillTree | None = None) -> Corpus:
        """Validate and persist a corpus file. Re-ingesting the same file is
        idempotent; reads submitted later are appended, never rewritten."""
        source = Path(corpus_file)
        text = source.read_text(encoding="utf-8")
        provenance = {
            "source": str(source),
            "ingested_at": datetime.now(timezone.utc).isoformat(),
        }
        corpus = ingest_corpus(parse_corpus_lines(text), tree=tree, provenance=provenance)
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            with self.corpus_path.open("w", encoding="utf-8") as f:
                for item in corpus.items.values():
                    f.write(json.dumps(item_record(item), ensure_ascii=False) + "\n")
                for response in corpus.responses.values():
                    f.write(json.dumps(response_record(response), ensure_ascii=False) + "\n")
            with self.reads_path.open("w", encoding="utf-8") as f:
                for read in corpus.reads:
                    f.write(json.dumps(read_record(read), ensure_ascii=False) + "\n")
            self.meta_path.write_text(json.dumps(provenance, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return corpus

    def load(self, tree: SkillTree | None = None) -> Corpus:
        if not self.exists():
            raise StoreError(f"no corpus ingested at {self.root}")
        text = self.corpus_path.read_text(encoding="utf-8")
        if self.reads_path.exists():
            text += self.reads_path.read_text(encoding="utf-8")
        provenance = {}
        if self.meta_path.exists():
            provenance = json.loads(self.meta_path.read_text(encoding="utf-8"))
        return ingest_corpus(parse_corpus_lines(text), tree=tree, provenance=provenance)

    # --- reads -----------------------------------------------------------

    def submit_read(self, read: HumanRead, tree: SkillTree) -> dict:
        """Validate against the active tree and current corpus, then append.

        Returns the canonical record that was persisted. Raises
        :class:`IngestError` on incomplete reads, out-of-bounds spans, or a
        duplicate (response, read_index).
        """
        with self._lock:
            corpus = self.load()
            label = f"read ({read.response_id!r}, read_index {read.read_index!r})"
            if read.read_index not in (1, 2):
                raise IngestError(f"{label}: read_index must be 1 or 2")
            if read.response_id not in corpus.responses:
                raise IngestError(f"{label}: references unknown response id '{read.response_id}'")
            key = (read.response_id, read.read_index)
            existing = {(r.response_id, r.read_index) for r in corpus.reads if not r.supersedes_prior}
            if not read.supersedes_prior and key in existing:
                raise IngestError(f"{label}: duplicate (response, read_index)")
            if read.supersedes_prior and key not in existing:
                raise IngestError(f"{label}: supersedes a read that does not exist")
            check_read_against_tree(read, tree, label)
            text = corpus.responses[read.response_id].text
            evidence = {}
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
                            f"{label}: subtrait '{sid}' span [{span.start},{span.end}) snapshot mismatch"
                        )
                    fixed.append(EvidenceSpan(span.start, span.end, actual))
                evidence[sid] = tuple(fixed)
            stamped = HumanRead(
                response_id=read.response_id,
                rater_id=read.rater_id,
                read_index=read.read_index,
                trait_scores=read.trait_scores,
                subtrait_scores=read.subtrait_scores,
                evidence=evidence,
                supersedes_prior=read.supersedes_prior,
                tree_version=tree.version,
            )
            record = read_record(stamped)
            with self.reads_path.open("a", encoding="utf-8") as f:
                f.write(json.dumps(record, ensure_ascii=False) + "\n")
            return record

    def read_records(self, rater_id: str | None = None) -> list[dict]:
        """Stored read records, byte-faithful to what was submitted."""
        if not self.reads_path.exists():
            return []
        out = []
        for line in self.reads_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if rater_id is None or record.get("rater_id") == rater_id:
                out.append(record)
        return out

    # --- scoring runs ----------------------------------------------------

    def append_runs(self, runs: Iterable[ScoringRun]) -> int:
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            count = 0
            with self.runs_path.open("a", encoding="utf-8") as f:
                for run in runs:
                    f.write(json.dumps(run_record(run), ensure_ascii=False) + "\n")
                    count += 1
            return count

    def load_runs(self) -> list[ScoringRun]:
        if not self.runs_path.exists():
            return []
        runs = []
        for line in self.runs_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                runs.append(run_from_record(json.loads(line)))
        return runs

    def clear_runs(self) -> None:
        with self._lock:
            if self.runs_path.exists():
                self.runs_path.unlink()

    # --- export ----------------------------------------------------------

    def export(self, out_path: str | Path, tree: SkillTree | None = None) -> int:
        corpus = self.load(tree=tree)
        text = dump_corpus_lines(corpus)
        Path(out_path).write_text(text, encoding="utf-8")
        return sum(corpus.counts().values())
