"""The HTTP lifecycle: create, refine, restore, ingest. Plus the store."""

import hashlib
import json
import threading
import time
from dataclasses import replace

import pytest
from fastapi.testclient import TestClient

from craftflow.errors import BadToken, UnknownWorkflow
from craftflow.ingest import MockProvider
from craftflow.model import (
    DoingNode,
    NoteAnnotation,
    ThingNode,
    TimeSpan,
    VideoMeta,
    annotate,
    compose_step,
    new_workflow,
)
from craftflow.notation import cwn, jsonio
from craftflow.service import create_app
from craftflow.storage import WorkflowStore

from conftest import FIXTURES


def _chain(duration=60.0, uri="video/demo.mp4"):
    third = duration / 3
    w = new_workflow(
        VideoMeta(uri, duration, "Demo"),
        ThingNode("t1", "materials", TimeSpan(0, third)),
    )
    return compose_step(
        w,
        "t1",
        DoingNode("d1", "work the piece", TimeSpan(third, 2 * third)),
        ThingNode("t2", "result", TimeSpan(2 * third, duration)),
    )


def _doc(**kwargs):
    return jsonio.to_dict(_chain(**kwargs))


def _gapped_doc():
    doc = _doc()
    doc["nodes"][0]["span"] = [5.0, 20.0]  # leaves [0, 5] uncovered
    return doc


@pytest.fixture()
def store(tmp_path):
    return WorkflowStore(tmp_path / "data")


@pytest.fixture()
def client(store):
    return TestClient(create_app(store))


class TestLifecycle:
    def test_healthz(self, client):
        r = client.get("/healthz")
        assert r.status_code == 200
        assert r.json() == {"ok": True}

    def test_create_then_get(self, client):
        doc = _doc()
        r = client.post("/workflows", json=doc)
        assert r.status_code == 201
        body = r.json()
        assert body["rev"] == 1
        assert body["edit_token"]
        assert "violations" not in body

        got = client.get(f"/workflows/{body['id']}")
        assert got.status_code == 200
        assert got.json() == dict(doc, id=body["id"], rev=1)

    def test_get_unknown_is_404(self, client):
        assert client.get("/workflows/wf-nope").status_code == 404

    def test_formats(self, client, store):
        r = client.post("/workflows", json=_doc())
        wf_id = r.json()["id"]

        as_cwn = client.get(f"/workflows/{wf_id}", params={"format": "cwn"})
        assert as_cwn.status_code == 200
        assert as_cwn.text.startswith("workflow ")
        assert cwn.parse_cwn(as_cwn.text) == store.get(wf_id)

        as_dot = client.get(f"/workflows/{wf_id}", params={"format": "dot"})
        assert "digraph" in as_dot.text
        assert as_dot.headers["content-type"].startswith("text/vnd.graphviz")

        bad = client.get(f"/workflows/{wf_id}", params={"format": "yaml"})
        assert bad.status_code == 400

    def test_schema_error_is_400(self, client):
        r = client.post("/workflows", json={"version": 2, "nodes": []})
        assert r.status_code == 400
        assert "error" in r.json()

    def test_strict_mode_rejects_flagged_doc(self, client):
        r = client.post("/workflows", json=_gapped_doc())
        assert r.status_code == 422
        codes = {v["code"] for v in r.json()["violations"]}
        assert "TemporalGap" in codes

    def test_warn_mode_stores_flagged_doc(self, store):
        lenient = TestClient(create_app(store, strict_validation=False))
        r = lenient.post("/workflows", json=_gapped_doc())
        assert r.status_code == 201
        body = r.json()
        assert any(v["code"] == "TemporalGap" for v in body["violations"])
        assert store.exists(body["id"])

    def test_update_needs_the_token(self, client, store):
        created = client.post("/workflows", json=_doc()).json()
        wf_id = created["id"]

        refused = client.put(
            f"/workflows/{wf_id}",
            json=_doc(),
            headers={"X-Edit-Token": "guess"},
        )
        assert refused.status_code == 403
        assert store.latest_rev(wf_id) == 1

        missing = client.put(f"/workflows/{wf_id}", json=_doc())
        assert missing.status_code == 403
        assert store.latest_rev(wf_id) == 1

    def test_update_unknown_is_404(self, client):
        r = client.put("/workflows/wf-nope", json=_doc())
        assert r.status_code == 404

    def test_every_revision_stays_readable(self, store):
        app = create_app(store, enable_history=True)
        client = TestClient(app)

        base = _chain()
        with_note = annotate(
            base, "d1", NoteAnnotation("n1", "d1", "mind the grain")
        )
        relabeled = replace(
            base,
            nodes=[
                replace(n, label="reworked piece") if n.id == "t2" else n
                for n in base.nodes
            ],
        )
        docs = [jsonio.to_dict(w) for w in (base, with_note, relabeled)]

        created = client.post("/workflows", json=docs[0]).json()
        wf_id, token = created["id"], created["edit_token"]
        for doc in docs[1:]:
            r = client.put(
                f"/workflows/{wf_id}", json=doc, headers={"X-Edit-Token": token}
            )
            assert r.status_code == 200
        assert r.json()["rev"] == 3

        # Replay: every stored revision still equals what was sent.
        for i, doc in enumerate(docs, start=1):
            got = client.get(f"/workflows/{wf_id}", params={"rev": i})
            assert got.json() == dict(doc, id=wf_id, rev=i)
        latest = client.get(f"/workflows/{wf_id}")
        assert latest.json() == dict(docs[-1], id=wf_id, rev=3)

        history = client.get(f"/workflows/{wf_id}/history").json()["revisions"]
        assert [h["rev"] for h in history] == [1, 2, 3]
        assert all("timestamp" in h for h in history)

        assert client.get(f"/workflows/{wf_id}", params={"rev": 9}).status_code == 404

    def test_history_is_off_by_default(self, client):
        wf_id = client.post("/workflows", json=_doc()).json()["id"]
        assert client.get(f"/workflows/{wf_id}/history").status_code == 404


class TestRestoreView:
    def test_read_only_body_without_credentials(self, client):
        created = client.post("/workflows", json=_doc()).json()
        wf_id, token = created["id"], created["edit_token"]

        r = client.get(f"/workflows/{wf_id}/restore")
        assert r.status_code == 200
        body = r.json()
        assert body["capability"] == "read-only"
        assert body["workflow"] == dict(_doc(), id=wf_id, rev=1)
        assert token not in r.text
        assert "edit_token" not in r.text

    def test_writes_are_405(self, client):
        created = client.post("/workflows", json=_doc()).json()
        wf_id, token = created["id"], created["edit_token"]
        url = f"/workflows/{wf_id}/restore"
        headers = {"X-Edit-Token": token}
        assert client.put(url, json=_doc(), headers=headers).status_code == 405
        assert client.post(url, json=_doc(), headers=headers).status_code == 405
        assert client.delete(url, headers=headers).status_code == 405
        assert client.patch(url, json={}, headers=headers).status_code == 405
        assert store_rev_unchanged(client, wf_id)

    def test_restore_of_unknown_is_404(self, client):
        assert client.get("/workflows/wf-nope/restore").status_code == 404


def store_rev_unchanged(client, wf_id):
    return client.get(f"/workflows/{wf_id}").json()["rev"] == 1


class TestIngestEndpoints:
    def test_no_provider_means_503(self, client):
        created = client.post("/workflows", json=_doc()).json()
        r = client.post(
            f"/workflows/{created['id']}/ingest",
            headers={"X-Edit-Token": created["edit_token"]},
        )
        assert r.status_code == 503

    def test_trigger_needs_the_token(self, store):
        provider = MockProvider(FIXTURES / "ingest")
        client = TestClient(create_app(store, provider=provider))
        created = client.post("/workflows", json=_doc()).json()
        r = client.post(
            f"/workflows/{created['id']}/ingest",
            headers={"X-Edit-Token": "guess"},
        )
        assert r.status_code == 403
        r = client.post("/workflows/wf-nope/ingest")
        assert r.status_code == 404

    def test_end_to_end(self, store):
        provider = MockProvider(FIXTURES / "ingest")
        client = TestClient(create_app(store, provider=provider))
        doc = _doc(duration=420.0, uri="file:granny-square.mp4")
        created = client.post("/workflows", json=doc).json()
        wf_id, token = created["id"], created["edit_token"]

        r = client.post(
            f"/workflows/{wf_id}/ingest", headers={"X-Edit-Token": token}
        )
        assert r.status_code == 202

        status = _wait_ingest(client, wf_id)
        assert status["state"] == "done"
        assert status["rev"] == 2
        assert status["report"]["outcome"] == "clean"
        assert "token" not in status

        fixture = (
            FIXTURES / "ingest" / "granny-square" / "attempt-1.json"
        ).read_text()
        expected = replace(jsonio.loads(fixture), id=wf_id, created_rev=2)
        got = client.get(f"/workflows/{wf_id}").json()
        assert got == jsonio.to_dict(expected)

    def test_second_trigger_while_running_is_409(self, store):
        gate = threading.Event()
        granny = (
            FIXTURES / "ingest" / "granny-square" / "attempt-1.json"
        ).read_text()

        class SlowProvider:
            name = "slow"
            capabilities = {"max_video_s": 3600.0}

            def analyze(self, prompt, video_uri, attempt):
                assert gate.wait(timeout=10)
                return granny

        client = TestClient(create_app(store, provider=SlowProvider()))
        doc = _doc(duration=420.0, uri="file:granny-square.mp4")
        created = client.post("/workflows", json=doc).json()
        wf_id, token = created["id"], created["edit_token"]
        headers = {"X-Edit-Token": token}
        try:
            assert (
                client.post(f"/workflows/{wf_id}/ingest", headers=headers).status_code
                == 202
            )
            running = client.get(f"/workflows/{wf_id}/ingest/status").json()
            assert running == {"state": "running"}
            assert (
                client.post(f"/workflows/{wf_id}/ingest", headers=headers).status_code
                == 409
            )
        finally:
            gate.set()
        assert _wait_ingest(client, wf_id)["state"] == "done"

    def test_failed_ingest_reports_residual(self, store):
        provider = MockProvider(FIXTURES / "ingest")
        from craftflow.ingest import IngestConfig

        client = TestClient(
            create_app(
                store,
                provider=provider,
                ingest_config=IngestConfig(max_retries=0),
            )
        )
        doc = _doc(duration=420.0, uri="file:always-bad.mp4")
        created = client.post("/workflows", json=doc).json()
        r = client.post(
            f"/workflows/{created['id']}/ingest",
            headers={"X-Edit-Token": created["edit_token"]},
        )
        assert r.status_code == 202
        status = _wait_ingest(client, created["id"])
        assert status["state"] == "failed"
        assert status["report"]["outcome"] == "failed"
        assert client.get(f"/workflows/{created['id']}").json()["rev"] == 1

    def test_status_of_untouched_workflow_is_idle(self, store):
        provider = MockProvider(FIXTURES / "ingest")
        client = TestClient(create_app(store, provider=provider))
        wf_id = client.post("/workflows", json=_doc()).json()["id"]
        r = client.get(f"/workflows/{wf_id}/ingest/status")
        assert r.json() == {"state": "idle"}
        assert client.get("/workflows/wf-nope/ingest/status").status_code == 404


def _wait_ingest(client, wf_id, timeout=15.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status = client.get(f"/workflows/{wf_id}/ingest/status").json()
        if status["state"] != "running":
            return status
        time.sleep(0.02)
    raise AssertionError("ingestion never settled")


class TestWorkflowStore:
    def test_create_and_get(self, store):
        w = _chain()
        wf_id, token = store.create(w)
        assert wf_id.startswith("wf-")
        got = store.get(wf_id)
        assert got == replace(w, id=wf_id, created_rev=1)
        assert store.latest_rev(wf_id) == 1
        assert store.list_ids() == [wf_id]

    def test_update_appends(self, store):
        wf_id, token = store.create(_chain())
        second = annotate(
            _chain(), "t1", NoteAnnotation("n1", "t1", "check the stock first")
        )
        assert store.update(wf_id, second, token) == 2
        assert store.get(wf_id, 1) == replace(_chain(), id=wf_id, created_rev=1)
        assert store.get(wf_id, 2) == replace(second, id=wf_id, created_rev=2)
        assert [r["rev"] for r in store.revisions(wf_id)] == [1, 2]

    def test_bad_token_rejected(self, store):
        wf_id, token = store.create(_chain())
        with pytest.raises(BadToken):
            store.update(wf_id, _chain(), token + "x")
        assert store.latest_rev(wf_id) == 1

    def test_unknown_ids(self, store):
        with pytest.raises(UnknownWorkflow):
            store.get("wf-missing")
        with pytest.raises(UnknownWorkflow):
            store.update("wf-missing", _chain(), "t")
        wf_id, _ = store.create(_chain())
        with pytest.raises(UnknownWorkflow):
            store.get(wf_id, rev=7)

    def test_on_disk_layout(self, store):
        wf_id, token = store.create(_chain())
        store.update(wf_id, _chain(), token)
        folder = store.data_dir / wf_id
        assert (folder / "rev-00001.json").exists()
        assert (folder / "rev-00002.json").exists()
        index = json.loads((folder / "index.json").read_text())
        # Only the digest is persisted, never the token itself.
        assert token not in (folder / "index.json").read_text()
        assert index["token_sha256"] == hashlib.sha256(token.encode()).hexdigest()
        stored = jsonio.loads((folder / "rev-00001.json").read_text())
        assert stored == replace(_chain(), id=wf_id, created_rev=1)

    def test_concurrent_updates_never_lose_a_revision(self, store):
        wf_id, token = store.create(_chain())
        errors = []

        def hammer():
            try:
                for _ in range(5):
                    store.update(wf_id, _chain(), token)
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=hammer) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        revs = [r["rev"] for r in store.revisions(wf_id)]
        assert revs == list(range(1, 42))
        for rev in revs:
            store.get(wf_id, rev)
