"""Human curation of candidate samples, with a small HTTP API.

Decisions are appended to a JSONL log and flushed before the caller sees
a response, so a crash can lose at most the decision in flight. Session
state is never stored directly; it is always rebuilt by replaying the log
over the candidate set, which makes restarts and re-opens idempotent.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass

from .formatter import EditSequenceSample, render_task_text

log = logging.getLogger(__name__)

PENDING = "pending"
ACCEPTED = "accepted"
REJECTED = "rejected"
SKIPPED = "skipped"

STATES = (PENDING, ACCEPTED, REJECTED, SKIPPED)
DECISIONS = (ACCEPTED, REJECTED, SKIPPED)

# the API talks in verbs, the log and item states in past participles
_DECISION_ALIASES = {
    "accept": ACCEPTED,
    "reject": REJECTED,
    "skip": SKIPPED,
    ACCEPTED: ACCEPTED,
    REJECTED: REJECTED,
    SKIPPED: SKIPPED,
}

# once accepted or rejected an item is settled; skipping only defers
_ALLOWED = {
    PENDING: {ACCEPTED, REJECTED, SKIPPED},
    SKIPPED: {ACCEPTED, REJECTED},
    ACCEPTED: set(),
    REJECTED: set(),
}

DEFAULT_QUOTA = 30


class ReviewError(Exception):
    pass


class UnknownSample(ReviewError, KeyError):
    pass


class InvalidDecision(ReviewError, ValueError):
    pass


class InvalidTransition(ReviewError, ValueError):
    pass


class QuotaFull(ReviewError):
    def __init__(self, language: str, limit: int):
        super().__init__(f"quota full for {language}: {limit} samples already accepted")
        self.language = language
        self.limit = limit


@dataclass
class ReviewItem:
    sample: EditSequenceSample
    state: str = PENDING

    @property
    def sample_id(self) -> str:
        return self.sample.sample_id

    def summary(self) -> dict:
        m = self.sample.metadata
        return {
            "sample_id": self.sample_id,
            "language": m.language,
            "repo_id": m.repo_id,
            "commit_id": m.commit_id,
            "file_path": m.file_path,
            "message": m.message,
            "state": self.state,
        }

    def detail(self) -> dict:
        d = self.summary()
        d.update(
            old_contents=self.sample.old_contents,
            history_diff=self.sample.history_diff,
            current_contents=self.sample.current_contents,
            new_contents=self.sample.new_contents,
            target_diff=self.sample.target_diff(),
            task_text=render_task_text(self.sample).text,
        )
        return d


class ReviewSession:
    """Candidate items plus their decision log.

    Construct via open(); the constructor itself assumes items are already
    in their replayed state.
    """

    def __init__(self, items: list[ReviewItem], log_path: str, quota: int = DEFAULT_QUOTA):
        if quota < 1:
            raise ValueError("quota must be >= 1")
        self._items: dict[str, ReviewItem] = {}
        self._order: list[str] = []
        for item in items:
            if item.sample_id in self._items:
                continue  # same commit exported twice; first occurrence wins
            self._items[item.sample_id] = item
            self._order.append(item.sample_id)
        self.log_path = log_path
        self.quota = quota
        self._log_fh = None
        self._lock = threading.Lock()

    # -- construction ------------------------------------------------------

    @classmethod
    def open(
        cls,
        candidates_path: str,
        log_path: str,
        quota: int = DEFAULT_QUOTA,
    ) -> "ReviewSession":
        items = []
        with open(candidates_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                items.append(ReviewItem(EditSequenceSample.from_dict(json.loads(line))))
        session = cls(items, log_path, quota)
        session._replay()
        return session

    def _replay(self):
        """Rebuild state from the log, warning and skipping anything that
        no longer applies. Leniency is what makes replay idempotent: running
        the same log twice just turns every already-applied decision into a
        skipped invalid transition. A truncated final line (crash during
        append) is silently dropped."""
        if not os.path.exists(self.log_path):
            return
        with open(self.log_path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        for idx, line in enumerate(lines):
            try:
                rec = json.loads(line)
                sample_id, decision = rec["sample_id"], rec["decision"]
            except (json.JSONDecodeError, KeyError, TypeError):
                if idx == len(lines) - 1:
                    break
                log.warning("%s:%d: corrupt decision record skipped", self.log_path, idx + 1)
                continue
            try:
                self._apply(sample_id, decision)
            except ReviewError as exc:
                log.warning("%s:%d: stale decision skipped: %s", self.log_path, idx + 1, exc)

    def replay(self):
        """Re-apply the log on top of the current state; safe to repeat."""
        with self._lock:
            self._replay()

    # -- state -------------------------------------------------------------

    def items(self, language: str | None = None, state: str | None = None) -> list[ReviewItem]:
        out = []
        for sid in self._order:
            item = self._items[sid]
            if language is not None and item.sample.metadata.language != language:
                continue
            if state is not None and item.state != state:
                continue
            out.append(item)
        return out

    def get(self, sample_id: str) -> ReviewItem:
        try:
            return self._items[sample_id]
        except KeyError:
            raise UnknownSample(sample_id) from None

    def accepted_count(self, language: str) -> int:
        return sum(
            1
            for item in self._items.values()
            if item.state == ACCEPTED and item.sample.metadata.language == language
        )

    def _validate(self, sample_id: str, decision: str) -> tuple[ReviewItem, str]:
        state = _DECISION_ALIASES.get(decision)
        if state is None:
            raise InvalidDecision(f"unknown decision {decision!r}")
        item = self.get(sample_id)
        if state not in _ALLOWED[item.state]:
            raise InvalidTransition(
                f"{sample_id}: cannot go {item.state} -> {state}"
            )
        if state == ACCEPTED:
            language = item.sample.metadata.language
            if self.accepted_count(language) >= self.quota:
                raise QuotaFull(language, self.quota)
        return item, state

    def _apply(self, sample_id: str, decision: str) -> ReviewItem:
        item, state = self._validate(sample_id, decision)
        item.state = state
        return item

    def decide(self, sample_id: str, decision: str) -> ReviewItem:
        """Validate, persist, then apply. The log line hits disk before the
        in-memory state changes, so an acknowledged decision survives a
        crash and the log never holds a record that fails validation."""
        with self._lock:
            _, state = self._validate(sample_id, decision)
            self._append_log({"sample_id": sample_id, "decision": state})
            return self._apply(sample_id, state)

    def _append_log(self, record: dict):
        if self._log_fh is None:
            self._log_fh = open(self.log_path, "a", encoding="utf-8")
        self._log_fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        self._log_fh.flush()
        os.fsync(self._log_fh.fileno())

    def close(self):
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    # -- reporting ---------------------------------------------------------

    def progress(self) -> dict:
        languages: dict[str, dict] = {}
        for item in self._items.values():
            lang = item.sample.metadata.language
            bucket = languages.setdefault(
                lang,
                {s: 0 for s in STATES} | {"total": 0, "quota": self.quota},
            )
            bucket[item.state] += 1
            bucket["total"] += 1
        overall = {s: 0 for s in STATES} | {"total": 0}
        for bucket in languages.values():
            for s in STATES:
                overall[s] += bucket[s]
            overall["total"] += bucket["total"]
        return {
            "languages": dict(sorted(languages.items())),
            "overall": overall,
            "quota": self.quota,
        }

    def export_accepted(self) -> list[EditSequenceSample]:
        """Accepted samples in (language, repo, commit) order; the order is
        part of the format so exports diff cleanly across sessions."""
        accepted = [
            item.sample for item in self._items.values() if item.state == ACCEPTED
        ]
        accepted.sort(
            key=lambda s: (
                s.metadata.language,
                s.metadata.repo_id,
                s.metadata.commit_id,
                s.metadata.file_path,
            )
        )
        return accepted


def create_app(session: ReviewSession, ui_dir: str | None = None):
    """HTTP wrapper over a session. API routes go first; the optional
    static UI mounts last at / so it cannot shadow them."""
    from fastapi import Body, FastAPI, HTTPException
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="edit review")

    @app.get("/api/items")
    def list_items(
        lang: str | None = None,
        status: str | None = None,
        page: int | None = None,
        page_size: int = 50,
    ):
        if status is not None and status not in STATES:
            raise HTTPException(status_code=400, detail=f"unknown status {status!r}")
        matched = session.items(lang, status)
        total = len(matched)
        if page is not None:
            if page < 1 or page_size < 1:
                raise HTTPException(status_code=400, detail="page and page_size start at 1")
            matched = matched[(page - 1) * page_size : page * page_size]
        return {"items": [item.summary() for item in matched], "total": total}

    @app.get("/api/items/{sample_id}")
    def get_item(sample_id: str):
        try:
            return session.get(sample_id).detail()
        except UnknownSample:
            raise HTTPException(status_code=404, detail=f"no sample {sample_id}")

    @app.post("/api/items/{sample_id}/decision")
    def post_decision(sample_id: str, payload: dict = Body(...)):
        decision = payload.get("decision")
        if not isinstance(decision, str):
            raise HTTPException(status_code=400, detail="missing decision")
        try:
            item = session.decide(sample_id, decision)
        except UnknownSample:
            raise HTTPException(status_code=404, detail=f"no sample {sample_id}")
        except InvalidDecision as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except (InvalidTransition, QuotaFull) as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"item": item.summary(), "progress": session.progress()}

    @app.get("/api/progress")
    def get_progress():
        return session.progress()

    @app.get("/api/export")
    def get_export():
        return {"samples": [s.to_dict() for s in session.export_accepted()]}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
