from __future__ import annotations

import time

import pytest
from fastapi.testclient import TestClient

from subscore.corpus import Corpus, dump_corpus_lines
from subscore.service import ServeConfig, build_assignments, create_app, load_tokens
from subscore.store import CorpusStore
from subscore.synth import synth_corpus

TOKENS = {"tok-ada": "marker-ada", "tok-bo": "marker-bo"}
ADA = {"Authorization": "Bearer tok-ada"}
BO = {"Authorization": "Bearer tok-bo"}


@pytest.fixture()
def harness(tmp_path, tree):
    """A served store holding items and responses but no reads yet."""
    full = synth_corpus(tree)
    bare = Corpus(items=full.items, responses=full.responses, reads=[])
    corpus_file = tmp_path / "corpus.jsonl"
    corpus_file.write_text(dump_corpus_lines(bare), encoding="utf-8")
    store = CorpusStore(tmp_path / "store")
    store.ingest(corpus_file, tree)
    app = create_app(store, tree, TOKENS, ServeConfig())
    return TestClient(app), store


def complete_read_body(tree, assignment, score=2):
    return {
        "response_id": assignment["response_id"],
        "read_index": assignment["read_index"],
        "trait_scores": {t.id: score for t in tree.traits},
        "subtrait_scores": {s.id: score for s in tree.subtraits()},
        "evidence": {
            "introduction-of-the-topic": [
                {"start": 0, "end": min(12, len(assignment["response"]["text"]))}
            ]
        },
    }


# --- assignment planning ------------------------------------------------------


def test_round_robin_assignments_cover_every_slot_once(corpus):
    queues = build_assignments(corpus, ["m1", "m2", "m3"], mode="by_item", seed=0)
    slots = [slot for queue in queues.values() for slot in queue]
    assert len(slots) == len(set(slots)) == 2 * len(corpus.responses)
    for rid in corpus.responses:
        markers = {m for m, queue in queues.items() for (r, _) in queue if r == rid}
        assert len(markers) == 2  # two different markers per response


def test_round_robin_balances_workloads(corpus):
    queues = build_assignments(corpus, ["m1", "m2", "m3", "m4"], mode="by_item", seed=0)
    sizes = sorted(len(q) for q in queues.values())
    assert sizes[-1] - sizes[0] <= 2


def test_single_marker_roster_gets_first_reads_only(corpus):
    queues = build_assignments(corpus, ["solo"], mode="by_item", seed=0)
    assert all(idx == 1 for _, idx in queues["solo"])


def test_token_file_loading(tmp_path):
    path = tmp_path / "tokens.json"
    path.write_text('{"tokens": {"t1": "m1", "t2": "m2"}}')
    assert load_tokens(path) == {"t1": "m1", "t2": "m2"}
    path.write_text('{"tokens": {}}')
    with pytest.raises(ValueError):
        load_tokens(path)
    path.write_text('{"tokens": {"t1": ""}}')
    with pytest.raises(ValueError):
        load_tokens(path)


# --- auth -----------------------------------------------------------------------


def test_endpoints_require_bearer_token(harness):
    client, _ = harness
    assert client.get("/api/tree").status_code == 401
    assert client.get("/api/tree", headers={"Authorization": "Bearer wrong"}).status_code == 401
    assert client.get("/api/tree", headers=ADA).status_code == 200


# --- tree -------------------------------------------------------------------------


def test_tree_payload_carries_rubric(harness, tree):
    client, _ = harness
    doc = client.get("/api/tree", headers=ADA).json()
    assert doc["version"] == tree.version
    subs = [s for t in doc["traits"] for s in t["subtraits"]]
    assert len(subs) == 8
    for sub in subs:
        assert len(sub["rubric"]) == 4
        assert sub["description"]


# --- assignment flow ----------------------------------------------------------------


def test_next_assignment_has_full_work_unit(harness):
    client, _ = harness
    doc = client.get("/api/assignments/next", headers=ADA).json()
    assert doc["complete"] is False
    unit = doc["assignment"]
    assert unit["read_index"] in (1, 2)
    assert unit["item"]["stimulus"]
    assert isinstance(unit["item"]["passages"], list)
    assert unit["response"]["text"]
    assert unit["traits"][0]["subtraits"][0]["rubric"]
    assert unit["tree_version"]
    assert unit["position"] == 1


def test_next_assignment_is_idempotent_until_submission(harness, tree):
    client, _ = harness
    first = client.get("/api/assignments/next", headers=ADA).json()
    second = client.get("/api/assignments/next", headers=ADA).json()
    assert first == second
    resp = client.post("/api/reads", json=complete_read_body(tree, first["assignment"]), headers=ADA)
    assert resp.status_code == 201
    third = client.get("/api/assignments/next", headers=ADA).json()
    assert third["assignment"] != first["assignment"]
    assert third["remaining"] == first["remaining"] - 1


def test_submit_rejects_rater_spoofing(harness, tree):
    client, _ = harness
    unit = client.get("/api/assignments/next", headers=ADA).json()["assignment"]
    body = complete_read_body(tree, unit)
    body["rater_id"] = "marker-bo"
    resp = client.post("/api/reads", json=body, headers=ADA)
    assert resp.status_code == 403


def test_submit_validates_against_tree(harness, tree):
    client, _ = harness
    unit = client.get("/api/assignments/next", headers=ADA).json()["assignment"]
    body = complete_read_body(tree, unit)
    del body["subtrait_scores"]["facts-and-quotations"]
    resp = client.post("/api/reads", json=body, headers=ADA)
    assert resp.status_code == 400
    assert "facts-and-quotations" in resp.json()["detail"]


def test_submit_rejects_out_of_bounds_span(harness, tree):
    client, _ = harness
    unit = client.get("/api/assignments/next", headers=ADA).json()["assignment"]
    body = complete_read_body(tree, unit)
    body["evidence"] = {"introduction-of-the-topic": [{"start": 0, "end": 10_000}]}
    resp = client.post("/api/reads", json=body, headers=ADA)
    assert resp.status_code == 400
    assert "introduction-of-the-topic" in resp.json()["detail"]


def test_submit_duplicate_slot_conflicts(harness, tree):
    client, _ = harness
    unit = client.get("/api/assignments/next", headers=ADA).json()["assignment"]
    body = complete_read_body(tree, unit)
    assert client.post("/api/reads", json=body, headers=ADA).status_code == 201
    resp = client.post("/api/reads", json=body, headers=ADA)
    assert resp.status_code == 409


def test_two_markers_drain_to_twenty_reads(harness, tree):
    client, store = harness
    for headers in (ADA, BO):
        while True:
            doc = client.get("/api/assignments/next", headers=headers).json()
            if doc["complete"]:
                assert doc["remaining"] == 0
                break
            resp = client.post(
                "/api/reads", json=complete_read_body(tree, doc["assignment"]), headers=headers
            )
            assert resp.status_code == 201
    records = store.read_records()
    assert len(records) == 20
    slots = {(r["response_id"], r["read_index"]) for r in records}
    assert len(slots) == 20
    assert all(r["tree_version"] == tree.version for r in records)


def test_read_history_refetches_byte_identically(harness, tree):
    client, _ = harness
    unit = client.get("/api/assignments/next", headers=ADA).json()["assignment"]
    client.post("/api/reads", json=complete_read_body(tree, unit), headers=ADA)
    a = client.get("/api/reads", params={"marker": "marker-ada"}, headers=ADA)
    b = client.get("/api/reads", params={"marker": "marker-ada"}, headers=ADA)
    assert a.content == b.content
    reads = a.json()["reads"]
    assert len(reads) == 1
    span = reads[0]["evidence"]["introduction-of-the-topic"][0]
    assert span["snapshot"] == unit["response"]["text"][span["start"]:span["end"]]


# --- scoring jobs --------------------------------------------------------------------


def wait_for_job(client, job_id, headers, timeout=15.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        doc = client.get(f"/api/jobs/{job_id}", headers=headers).json()
        if doc["status"] in ("done", "failed"):
            return doc
        time.sleep(0.05)
    raise AssertionError("job did not finish in time")


def test_score_job_lifecycle(harness):
    client, store = harness
    resp = client.post(
        "/api/jobs/score", json={"provider": "mock", "runs": 2, "seed": 5}, headers=ADA
    )
    assert resp.status_code == 202
    job_id = resp.json()["job_id"]
    doc = wait_for_job(client, job_id, ADA)
    assert doc["status"] == "done"
    assert doc["done"] == doc["total"] == 10 * 8 * 2
    assert len(store.load_runs()) == 160


def test_score_job_validation(harness):
    client, _ = harness
    assert (
        client.post("/api/jobs/score", json={"runs": 0}, headers=ADA).status_code == 400
    )
    resp = client.post("/api/jobs/score", json={"subtraits": ["mystery"]}, headers=ADA)
    assert resp.status_code == 400
    assert "mystery" in resp.json()["detail"]
    assert client.get("/api/jobs/nothere", headers=ADA).status_code == 404


def test_failed_job_captures_error(harness, monkeypatch):
    client, _ = harness
    monkeypatch.delenv("GLM_API_KEY", raising=False)
    resp = client.post("/api/jobs/score", json={"provider": "nonsense"}, headers=ADA)
    assert resp.status_code == 202
    doc = wait_for_job(client, resp.json()["job_id"], ADA)
    assert doc["status"] == "failed"
    assert doc["error"]


# --- reports ----------------------------------------------------------------------


def scored_harness(harness, tree):
    client, store = harness
    for headers in (ADA, BO):
        while True:
            doc = client.get("/api/assignments/next", headers=headers).json()
            if doc["complete"]:
                break
            unit = doc["assignment"]
            # vary scores across responses so downstream statistics are defined
            score = int(unit["response_id"].rsplit("-", 1)[1]) % 4
            client.post("/api/reads", json=complete_read_body(tree, unit, score=score), headers=headers)
    resp = client.post("/api/jobs/score", json={"provider": "mock", "runs": 2, "seed": 5}, headers=ADA)
    wait_for_job(client, resp.json()["job_id"], ADA)
    return client, store


def test_reports_before_scoring_are_a_conflict(harness, tree):
    client, _ = harness
    resp = client.get("/api/reports/irr", headers=ADA)
    assert resp.status_code == 409


def test_report_names_and_formats(harness, tree):
    client, _ = scored_harness(harness, tree)
    assert client.get("/api/reports/unknown", headers=ADA).status_code == 404
    bundle = client.get("/api/reports/bundle", headers=ADA).json()
    assert set(bundle) == {
        "config",
        "irr",
        "correlation",
        "human_model",
        "classification",
        "consistency",
        "confusion",
        "overlap",
    }
    single = client.get("/api/reports/irr", headers=ADA).json()
    assert set(single) == {"irr", "config"}
    text = client.get("/api/reports/irr", params={"format": "text"}, headers=ADA)
    assert text.status_code == 200
    assert text.text.startswith("Inter-rater reliability")
    no_text = client.get("/api/reports/confusion", params={"format": "text"}, headers=ADA)
    assert no_text.status_code == 400


def test_index_serves_placeholder_without_ui(harness):
    client, _ = harness
    resp = client.get("/", headers=ADA)
    assert resp.status_code == 200
    assert "subscore" in resp.text
