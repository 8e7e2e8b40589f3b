"""HTTP surface: marker work queues, read submission, score jobs, reports.

The store is the single synchronization point: assignment cursors are derived
from persisted reads rather than held in memory, so repeating a request never
changes state and a restarted server resumes exactly where markers left off.
Authentication is bearer tokens from a static token file, adequate for a
study-scale deployment with a known roster.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .corpus import Corpus, EvidenceSpan, HumanRead, IngestError, order_responses
from .gateway import Gateway, HttpChatProvider, HttpProviderConfig, SeededMockProvider
from .reporting import (
    ReportConfig,
    ReportError,
    build_bundle,
    render_classification_tables,
    render_consistency_table,
    render_correlation_table,
    render_human_model_table,
    render_irr_table,
    render_overlap_table,
)
from .rubric import SkillTree
from .scoring import PromptSettings, score_batch
from .store import CorpusStore, StoreError


def load_tokens(path: str | Path) -> dict[str, str]:
    """Token file: {"tokens": {"<bearer token>": "<marker id>"}}.

    Marker roster order is the file's insertion order, which makes
    round-robin assignment reproducible from the file alone.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    tokens = doc.get("tokens")
    if not isinstance(tokens, dict) or not tokens:
        raise ValueError("token file needs a non-empty 'tokens' map of token -> marker id")
    out: dict[str, str] = {}
    for token, marker in tokens.items():
        if not isinstance(token, str) or not token or not isinstance(marker, str) or not marker:
            raise ValueError("token file entries must be non-empty strings")
        out[token] = marker
    return out


@dataclass(frozen=True)
class ServeConfig:
    order_mode: str = "by_item"  # queue presentation: by_item | pooled
    order_seed: int = 0
    ui_dir: str | None = None
    provider_base_url: str = "https://api.openai.com/v1"
    provider_model: str = "gpt-4o-mini"
    report: ReportConfig = field(default_factory=ReportConfig)


def build_assignments(corpus: Corpus, roster: list[str], mode: str, seed: int) -> dict[str, list[tuple[str, int]]]:
    """Round-robin double-read assignment.

    Response at queue position i gets read 1 from roster[i % M] and read 2
    from roster[(i+1) % M], so no marker reads the same response twice and
    every marker's workload differs by at most one response per read index.
    """
    if not roster:
        raise ValueError("empty marker roster")
    order = order_responses(corpus, mode=mode, seed=seed)
    queues: dict[str, list[tuple[str, int]]] = {marker: [] for marker in roster}
    m = len(roster)
    for i, response_id in enumerate(order):
        first = roster[i % m]
        queues[first].append((response_id, 1))
        if m > 1:
            queues[roster[(i + 1) % m]].append((response_id, 2))
    return queues


class SpanBody(BaseModel):
    start: int
    end: int
    snapshot: str = ""


class ReadBody(BaseModel):
    response_id: str
    read_index: int
    trait_scores: dict[str, int]
    subtrait_scores: dict[str, int]
    evidence: dict[str, list[SpanBody]] = Field(default_factory=dict)
    supersedes_prior: bool = False
    rater_id: str | None = None  # optional; must match the token's marker when present


class ScoreJobBody(BaseModel):
    subtraits: str | list[str] = "all"
    runs: int = 1
    provider: str = "mock"
    seed: int = 0
    temperature: float = 1.0


@dataclass
class ScoreJob:
    job_id: str
    status: str = "queued"  # queued | running | done | failed
    done: int = 0
    total: int = 0
    error: str = ""
    parameters: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "status": self.status,
            "done": self.done,
            "total": self.total,
            "error": self.error,
            "parameters": self.parameters,
        }


_TABLE_RENDERERS = {
    "irr": render_irr_table,
    "correlation": render_correlation_table,
    "human_model": render_human_model_table,
    "classification": render_classification_tables,
    "consistency": render_consistency_table,
    "overlap": render_overlap_table,
}
REPORT_NAMES = ("bundle", "irr", "correlation", "human_model", "classification", "consistency", "confusion", "overlap")


def create_app(
    store: CorpusStore,
    tree: SkillTree,
    tokens: Mapping[str, str],
    config: ServeConfig | None = None,
) -> FastAPI:
    config = config or ServeConfig()
    roster = list(dict.fromkeys(tokens.values()))
    app = FastAPI(title="subscore annotation service", docs_url=None, redoc_url=None)
    jobs: dict[str, ScoreJob] = {}
    jobs_lock = threading.Lock()

    def marker_from_auth(request: Request) -> str:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = header[7:].strip()
        marker = tokens.get(token)
        if marker is None:
            raise HTTPException(status_code=401, detail="unknown token")
        return marker

    def corpus_or_409() -> Corpus:
        if not store.exists():
            raise HTTPException(status_code=409, detail="no corpus ingested yet")
        return store.load(tree)

    @app.get("/api/tree")
    def get_tree(marker: str = Depends(marker_from_auth)) -> dict:
        return {"version": tree.version, **_tree_doc(tree)}

    @app.get("/api/assignments/next")
    def next_assignment(marker: str = Depends(marker_from_auth)) -> dict:
        corpus = corpus_or_409()
        queues = build_assignments(corpus, roster, config.order_mode, config.order_seed)
        queue = queues.get(marker, [])
        # A slot is done once anyone's read fills it: the store enforces one
        # read per (response, read_index), so a filled slot can never be pending.
        submitted = {
            (rec["response_id"], rec["read_index"])
            for rec in store.read_records()
        }
        pending = [(rid, idx) for rid, idx in queue if (rid, idx) not in submitted]
        if not pending:
            return {"complete": True, "assignment": None, "remaining": 0}
        response_id, read_index = pending[0]
        response = corpus.responses[response_id]
        item = corpus.items[response.item_id]
        return {
            "complete": False,
            "remaining": len(pending),
            "assignment": {
                "response_id": response_id,
                "read_index": read_index,
                "position": len(queue) - len(pending) + 1,
                "total": len(queue),
                "tree_version": tree.version,
                "item": {
                    "id": item.id,
                    "title": item.title,
                    "stimulus": item.stimulus,
                    "passages": list(item.passages),
                },
                "response": {"id": response.id, "text": response.text},
                "traits": _tree_doc(tree)["traits"],
            },
        }

    @app.post("/api/reads", status_code=201)
    def submit_read(body: ReadBody, marker: str = Depends(marker_from_auth)) -> dict:
        if body.rater_id is not None and body.rater_id != marker:
            raise HTTPException(status_code=403, detail=f"token belongs to {marker!r}, not {body.rater_id!r}")
        read = HumanRead(
            response_id=body.response_id,
            rater_id=marker,
            read_index=body.read_index,
            trait_scores=dict(body.trait_scores),
            subtrait_scores=dict(body.subtrait_scores),
            evidence={
                sid: tuple(EvidenceSpan(s.start, s.end, s.snapshot) for s in spans)
                for sid, spans in body.evidence.items()
            },
            supersedes_prior=body.supersedes_prior,
        )
        try:
            stored = store.submit_read(read, tree)
        except IngestError as exc:
            message = str(exc)
            status = 409 if "duplicate" in message else 400
            raise HTTPException(status_code=status, detail=message) from exc
        except StoreError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"ok": True, "read": stored}

    @app.get("/api/reads")
    def list_reads(
        marker_filter: str | None = Query(default=None, alias="marker"),
        caller: str = Depends(marker_from_auth),
    ) -> dict:
        records = store.read_records(rater_id=marker_filter)
        return {"reads": records}

    @app.post("/api/jobs/score", status_code=202)
    def start_score_job(body: ScoreJobBody, marker: str = Depends(marker_from_auth)) -> dict:
        corpus = corpus_or_409()
        subtrait_ids = None if body.subtraits == "all" else list(body.subtraits)
        if body.runs < 1:
            raise HTTPException(status_code=400, detail="runs must be >= 1")
        known = set(tree.subtrait_ids())
        for sid in subtrait_ids or []:
            if sid not in known:
                raise HTTPException(status_code=400, detail=f"unknown subtrait {sid!r}")
        n_subtraits = len(subtrait_ids) if subtrait_ids is not None else len(known)
        job = ScoreJob(
            job_id=uuid.uuid4().hex,
            total=len(corpus.responses) * n_subtraits * body.runs,
            parameters={
                "subtraits": body.subtraits,
                "runs": body.runs,
                "provider": body.provider,
                "seed": body.seed,
            },
        )
        with jobs_lock:
            jobs[job.job_id] = job

        def run_job() -> None:
            job.status = "running"
            try:
                provider = _make_provider(body.provider, corpus, body.seed, config)
                gateway = Gateway(provider)

                def progress(_run) -> None:
                    job.done += 1

                runs = score_batch(
                    gateway,
                    corpus,
                    tree,
                    runs_per_pair=body.runs,
                    settings=PromptSettings(temperature=body.temperature, seed=body.seed),
                    subtrait_ids=subtrait_ids,
                    progress=progress,
                )
                store.append_runs(runs)
                job.status = "done"
            except Exception as exc:  # job failures must land in the job record
                job.status = "failed"
                job.error = str(exc)

        threading.Thread(target=run_job, daemon=True).start()
        return {"job_id": job.job_id}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str, marker: str = Depends(marker_from_auth)) -> dict:
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job.as_dict()

    @app.get("/api/reports/{name}")
    def get_report(name: str, format: str = "json", marker: str = Depends(marker_from_auth)):
        if name not in REPORT_NAMES:
            raise HTTPException(status_code=404, detail=f"unknown report {name!r}; one of {REPORT_NAMES}")
        corpus = corpus_or_409()
        runs = store.load_runs()
        try:
            bundle = build_bundle(corpus, runs, tree, config.report)
        except (ReportError, ValueError) as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        if format == "text":
            renderer = _TABLE_RENDERERS.get(name)
            if renderer is None:
                raise HTTPException(status_code=400, detail=f"report {name!r} has no text rendering")
            return PlainTextResponse(renderer(bundle))
        if name == "bundle":
            return bundle
        return {name: bundle[name], "config": bundle["config"]}

    ui_dir = config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return (
                "<!doctype html><meta charset='utf-8'><title>subscore</title>"
                "<h1>subscore annotation service</h1>"
                "<p>No UI bundle is mounted. The JSON API lives under <code>/api/</code>.</p>"
            )

    return app


def _tree_doc(tree: SkillTree) -> dict:
    return {
        "traits": [
            {
                "id": trait.id,
                "name": trait.name,
                "scale": {"min": trait.scale.min, "max": trait.scale.max},
                "subtraits": [
                    {
                        "id": sub.id,
                        "name": sub.name,
                        "description": sub.description,
                        "scale": {"min": sub.scale.min, "max": sub.scale.max},
                        "rubric": list(sub.rubric),
                        "standards": list(sub.standards),
                    }
                    for sub in trait.subtraits
                ],
            }
            for trait in tree.traits
        ]
    }


def _make_provider(name: str, corpus: Corpus, seed: int, config: ServeConfig):
    if name == "mock":
        return SeededMockProvider({rid: r.text for rid, r in corpus.responses.items()}, seed=seed)
    if name == "live":
        return HttpChatProvider(HttpProviderConfig(base_url=config.provider_base_url, model=config.provider_model))
    raise ValueError(f"unknown provider {name!r}; expected 'mock' or 'live'")
