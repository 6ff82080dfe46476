"""Versioned on-disk store: one directory per workflow, one JSON file
per revision, plus a small index file.

History is append-only; nothing ever rewrites a stored revision. Writes
go temp-then-rename, revision file before index, so a crash between the
two leaves the previous index intact and the orphaned revision file is
simply ignored on recovery. The edit token is stored only as a sha256
digest.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import secrets
import threading
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .errors import BadToken, UnknownWorkflow
from .model import Workflow
from .notation import jsonio


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _token_digest(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class WorkflowStore:
    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._master = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    def _lock(self, wf_id: str) -> threading.Lock:
        with self._master:
            return self._locks.setdefault(wf_id, threading.Lock())

    def _dir(self, wf_id: str) -> Path:
        return self.data_dir / wf_id

    def _index_path(self, wf_id: str) -> Path:
        return self._dir(wf_id) / "index.json"

    def _read_index(self, wf_id: str) -> dict:
        path = self._index_path(wf_id)
        if not path.exists():
            raise UnknownWorkflow(f"no workflow {wf_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    def _append(self, wf_id: str, index: dict, w: Workflow, author: str) -> int:
        revisions = index["revisions"]
        rev = revisions[-1]["rev"] + 1 if revisions else 1
        stored = replace(w, id=wf_id, created_rev=rev)
        filename = f"rev-{rev:05d}.json"
        _write_atomic(self._dir(wf_id) / filename, jsonio.dumps(stored))
        revisions.append(
            {"rev": rev, "author": author, "timestamp": _now(), "file": filename}
        )
        _write_atomic(
            self._index_path(wf_id), json.dumps(index, indent=2) + "\n"
        )
        return rev

    def create(self, w: Workflow, author: str = "") -> tuple[str, str]:
        """Returns (workflow id, edit token). The token is shown once;
        only its digest is kept."""
        token = secrets.token_urlsafe(24)
        while True:
            wf_id = "wf-" + secrets.token_hex(6)
            try:
                self._dir(wf_id).mkdir(parents=True, exist_ok=False)
                break
            except FileExistsError:
                continue
        index = {
            "id": wf_id,
            "token_sha256": _token_digest(token),
            "created_at": _now(),
            "revisions": [],
        }
        with self._lock(wf_id):
            self._append(wf_id, index, w, author)
        return wf_id, token

    def exists(self, wf_id: str) -> bool:
        return self._index_path(wf_id).exists()

    def check_token(self, wf_id: str, token: Optional[str]) -> None:
        index = self._read_index(wf_id)
        if token is None or not hmac.compare_digest(
            _token_digest(token), index["token_sha256"]
        ):
            raise BadToken("edit token missing or wrong")

    def update(self, wf_id: str, w: Workflow, token: str, author: str = "") -> int:
        with self._lock(wf_id):
            self.check_token(wf_id, token)
            index = self._read_index(wf_id)
            return self._append(wf_id, index, w, author)

    def latest_rev(self, wf_id: str) -> int:
        return self._read_index(wf_id)["revisions"][-1]["rev"]

    def get(self, wf_id: str, rev: Optional[int] = None) -> Workflow:
        index = self._read_index(wf_id)
        revisions = index["revisions"]
        if rev is None:
            entry = revisions[-1]
        else:
            entry = next((r for r in revisions if r["rev"] == rev), None)
            if entry is None:
                raise UnknownWorkflow(f"workflow {wf_id!r} has no revision {rev}")
        text = (self._dir(wf_id) / entry["file"]).read_text(encoding="utf-8")
        return jsonio.loads(text)

    def revisions(self, wf_id: str) -> list[dict]:
        """History metadata, oldest first, without file names."""
        return [
            {"rev": r["rev"], "author": r["author"], "timestamp": r["timestamp"]}
            for r in self._read_index(wf_id)["revisions"]
        ]

    def list_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.data_dir.iterdir() if (p / "index.json").exists()
        )
