"""Session service: runs human teaching sessions over HTTP with JSONL logs.

Lifecycle per session: tutorial -> teaching (default 20) -> testing (default
20) -> done. Teaching responses return the correct class and, for the
explanation strategies, the heatmap grid plus the timing directives the
client must honor (overlay alternation cadence and a minimum wait). The
server also enforces the minimum wait: a response that arrives too soon after
teaching feedback was issued is rejected, which keeps the logs honest.
Testing responses are acknowledged with no correctness information at all.

Each session is one append-only JSONL file; restarting the service rebuilds
its index by folding the logs.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import (
    DataError,
    Dataset,
    Strategy,
    TeachingSet,
    load_dataset,
    load_teaching_set,
)

DEFAULT_TEACH_LEN = 20
DEFAULT_TEST_LEN = 20
DEFAULT_ALTERNATE_MS = 500
DEFAULT_MIN_WAIT_MS = 2000

PHASE_TUTORIAL = "tutorial"
PHASE_TEACHING = "teaching"
PHASE_TESTING = "testing"
PHASE_DONE = "done"


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


def _unknown_session(session_id: str) -> ServiceError:
    return ServiceError("unknown_session", f"no session {session_id!r}", 404)


@dataclass
class ServiceConfig:
    dataset_path: str
    teaching_set_paths: dict[str, str]
    data_dir: str
    port: int = 8000
    teach_len: int = DEFAULT_TEACH_LEN
    test_len: int = DEFAULT_TEST_LEN
    alternate_ms: int = DEFAULT_ALTERNATE_MS
    min_wait_ms: int = DEFAULT_MIN_WAIT_MS
    seed: int | None = None
    assets_dir: str | None = None
    tutorial_title: str = "Welcome"
    tutorial_body: str = (
        "You will first study a sequence of labeled examples, then identify "
        "new ones on your own. Answer every item; during the study phase the "
        "correct answer is shown after each response."
    )

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read service config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"service config {path} is not valid JSON: {exc}") from exc
        try:
            return cls(
                dataset_path=obj["dataset"],
                teaching_set_paths=dict(obj["teaching_sets"]),
                data_dir=obj["data_dir"],
                port=int(obj.get("port", 8000)),
                teach_len=int(obj.get("teach_len", DEFAULT_TEACH_LEN)),
                test_len=int(obj.get("test_len", DEFAULT_TEST_LEN)),
                alternate_ms=int(obj.get("alternate_ms", DEFAULT_ALTERNATE_MS)),
                min_wait_ms=int(obj.get("min_wait_ms", DEFAULT_MIN_WAIT_MS)),
                seed=obj.get("seed"),
                assets_dir=obj.get("assets_dir"),
                tutorial_title=obj.get("tutorial_title", cls.tutorial_title),
                tutorial_body=obj.get("tutorial_body", cls.tutorial_body),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed service config: {exc}") from exc


@dataclass
class SessionState:
    """Mutable per-session record rebuilt from (and mirrored to) its log."""

    session_id: str
    strategy: Strategy
    teach_ids: list[str]
    test_ids: list[str]
    button_order: list[int]
    created_at: float
    phase: str = PHASE_TUTORIAL
    cursor: int = 0
    responses: list[dict] = field(default_factory=list)
    last_feedback_at: float | None = None
    served: bool = False  # in-memory only: current cursor was fetched via next
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def advance(self, teach_len: int, test_len: int) -> None:
        if self.phase == PHASE_TUTORIAL:
            self.phase = PHASE_TEACHING
            self.cursor = 0
        elif self.phase == PHASE_TEACHING:
            self.cursor += 1
            if self.cursor >= teach_len:
                self.phase = PHASE_TESTING
                self.cursor = 0
        elif self.phase == PHASE_TESTING:
            self.cursor += 1
            if self.cursor >= test_len:
                self.phase = PHASE_DONE
                self.cursor = 0
        self.served = False


def fold_session_log(lines: Sequence[str], teach_len: int, test_len: int) -> SessionState:
    """Reconstruct session state by replaying an append-only event log."""
    state: SessionState | None = None
    for raw in lines:
        raw = raw.strip()
        if not raw:
            continue
        event = json.loads(raw)
        kind = event.get("event")
        if kind == "created":
            state = SessionState(
                session_id=event["session_id"],
                strategy=Strategy(event["strategy"]),
                teach_ids=list(event["teach_ids"]),
                test_ids=list(event["test_ids"]),
                button_order=[int(b) for b in event["button_order"]],
                created_at=float(event["created_at"]),
            )
        elif kind == "tutorial_done":
            if state is None:
                raise DataError("log has events before the created event")
            state.advance(teach_len, test_len)
        elif kind == "response":
            if state is None:
                raise DataError("log has a response before the created event")
            state.responses.append(
                {
                    "phase": event["phase"],
                    "index": int(event["index"]),
                    "item_id": event["item_id"],
                    "choice": int(event["choice"]),
                    "correct": bool(event["correct"]),
                    "timestamp": float(event["timestamp"]),
                }
            )
            if event["phase"] == PHASE_TEACHING:
                state.last_feedback_at = float(event["timestamp"])
            state.advance(teach_len, test_len)
        else:
            raise DataError(f"unknown log event {kind!r}")
    if state is None:
        raise DataError("log contains no created event")
    return state


def replay_score(lines: Sequence[str], teach_len: int, test_len: int) -> dict:
    """Independent verifier: final accuracy and confusion from a raw log."""
    state = fold_session_log(lines, teach_len, test_len)
    test_responses = [r for r in state.responses if r["phase"] == PHASE_TESTING]
    correct = sum(1 for r in test_responses if r["correct"])
    return {
        "session_id": state.session_id,
        "phase": state.phase,
        "test_responses": len(test_responses),
        "accuracy": correct / test_len if test_responses else 0.0,
    }


class SessionService:
    """Protocol core; the HTTP layer is a thin wrapper around these methods."""

    def __init__(self, config: ServiceConfig, clock: Callable[[], float] = time.time):
        self.config = config
        self.clock = clock
        self.dataset: Dataset = load_dataset(config.dataset_path)
        self.teaching_sets: dict[Strategy, TeachingSet] = {}
        for name, path in sorted(config.teaching_set_paths.items()):
            strategy = Strategy(name)
            tset = load_teaching_set(path)
            if len(tset.item_ids) < config.teach_len:
                raise DataError(
                    f"teaching set for {name} has {len(tset.item_ids)} items; "
                    f"need {config.teach_len}"
                )
            for iid in tset.item_ids:
                self.dataset.item_by_id(iid)
            self.teaching_sets[strategy] = tset
        if not self.teaching_sets:
            raise DataError("service needs at least one teaching set")
        teach_pool = {iid for t in self.teaching_sets.values() for iid in t.item_ids[: config.teach_len]}
        self.test_pool = [
            item.id for item in self.dataset.items if item.id not in teach_pool
        ]
        if len(self.test_pool) < config.test_len:
            raise DataError(
                f"only {len(self.test_pool)} items outside the teaching sets; "
                f"need {config.test_len} for testing"
            )
        self.rng = np.random.default_rng(config.seed)
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self.sessions: dict[str, SessionState] = {}
        for log_path in sorted(self.data_dir.glob("*.jsonl")):
            lines = log_path.read_text(encoding="utf-8").splitlines()
            state = fold_session_log(lines, config.teach_len, config.test_len)
            self.sessions[state.session_id] = state

    # -- helpers ------------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.jsonl"

    def _append_event(self, session_id: str, event: dict) -> None:
        with open(self._log_path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event))
            fh.write("\n")
            fh.flush()

    def _session(self, session_id: str) -> SessionState:
        state = self.sessions.get(session_id)
        if state is None:
            raise _unknown_session(session_id)
        return state

    def _options(self, state: SessionState) -> list[dict]:
        return [
            {"value": c, "label": self.dataset.classes[c]} for c in state.button_order
        ]

    def _teach_item(self, state: SessionState, index: int):
        return self.dataset.item_by_id(state.teach_ids[index])

    def _test_item(self, state: SessionState, index: int):
        return self.dataset.item_by_id(state.test_ids[index])

    # -- operations ----------------------------------------------------------

    def create_session(self, strategy_name: str) -> dict:
        with self._registry_lock:
            available = sorted(self.teaching_sets, key=lambda s: s.value)
            if strategy_name == "random":
                strategy = available[int(self.rng.integers(0, len(available)))]
            else:
                try:
                    strategy = Strategy(strategy_name)
                except ValueError:
                    raise ServiceError(
                        "unknown_strategy", f"unknown strategy {strategy_name!r}", 400
                    ) from None
                if strategy not in self.teaching_sets:
                    raise ServiceError(
                        "unknown_strategy",
                        f"no teaching set configured for {strategy_name!r}",
                        400,
                    )
            session_id = "s" + self.rng.bytes(8).hex()
            while session_id in self.sessions:
                session_id = "s" + self.rng.bytes(8).hex()
            teach_ids = list(self.teaching_sets[strategy].item_ids[: self.config.teach_len])
            test_pick = self.rng.permutation(len(self.test_pool))[: self.config.test_len]
            test_ids = [self.test_pool[int(i)] for i in test_pick]
            button_order = [int(c) for c in self.rng.permutation(self.dataset.num_classes)]
            state = SessionState(
                session_id=session_id,
                strategy=strategy,
                teach_ids=teach_ids,
                test_ids=test_ids,
                button_order=button_order,
                created_at=self.clock(),
            )
            self.sessions[session_id] = state
            self._append_event(
                session_id,
                {
                    "event": "created",
                    "session_id": session_id,
                    "strategy": strategy.value,
                    "created_at": state.created_at,
                    "teach_ids": teach_ids,
                    "test_ids": test_ids,
                    "button_order": button_order,
                },
            )
        return {
            "session_id": session_id,
            "strategy": strategy.value,
            "phase": state.phase,
            "teach_len": self.config.teach_len,
            "test_len": self.config.test_len,
            "options": self._options(state),
        }

    def next_item(self, session_id: str) -> dict:
        state = self._session(session_id)
        with state.lock:
            if state.phase == PHASE_DONE:
                return {"phase": PHASE_DONE, "accuracy": self._accuracy(state)}
            state.served = True
            if state.phase == PHASE_TUTORIAL:
                return {
                    "phase": PHASE_TUTORIAL,
                    "index": 0,
                    "total": 1,
                    "tutorial": {
                        "title": self.config.tutorial_title,
                        "body": self.config.tutorial_body,
                    },
                    "options": self._options(state),
                }
            if state.phase == PHASE_TEACHING:
                item = self._teach_item(state, state.cursor)
                return {
                    "phase": PHASE_TEACHING,
                    "index": state.cursor,
                    "total": self.config.teach_len,
                    "item_id": item.id,
                    "image_uri": item.image_uri,
                    "options": self._options(state),
                }
            item = self._test_item(state, state.cursor)
            return {
                "phase": PHASE_TESTING,
                "index": state.cursor,
                "total": self.config.test_len,
                "image_uri": item.image_uri,
                "options": self._options(state),
            }

    def respond(self, session_id: str, index: int, choice: int) -> dict:
        state = self._session(session_id)
        with state.lock:
            if state.phase == PHASE_DONE:
                raise ServiceError("stale_index", "session already finished", 409)
            if index != state.cursor:
                raise ServiceError(
                    "stale_index",
                    f"expected index {state.cursor} in phase {state.phase}, got {index}",
                    409,
                )
            if not state.served:
                raise ServiceError(
                    "out_of_order", "fetch the current item before responding", 409
                )
            if not (0 <= choice < self.dataset.num_classes):
                raise ServiceError("invalid_choice", f"choice {choice} out of range", 400)
            now = self.clock()
            if state.last_feedback_at is not None:
                waited_ms = (now - state.last_feedback_at) * 1000.0
                if waited_ms < self.config.min_wait_ms:
                    raise ServiceError(
                        "too_fast",
                        f"wait at least {self.config.min_wait_ms} ms after feedback",
                        429,
                    )
            if state.phase == PHASE_TUTORIAL:
                self._append_event(
                    session_id, {"event": "tutorial_done", "timestamp": now}
                )
                state.advance(self.config.teach_len, self.config.test_len)
                return {"phase": PHASE_TUTORIAL, "acknowledged": True, "next_phase": state.phase}
            if state.phase == PHASE_TEACHING:
                item = self._teach_item(state, index)
                correct = choice == item.class_index
                self._append_event(
                    session_id,
                    {
                        "event": "response",
                        "phase": PHASE_TEACHING,
                        "index": index,
                        "item_id": item.id,
                        "choice": choice,
                        "correct": correct,
                        "timestamp": now,
                    },
                )
                state.responses.append(
                    {
                        "phase": PHASE_TEACHING,
                        "index": index,
                        "item_id": item.id,
                        "choice": choice,
                        "correct": correct,
                        "timestamp": now,
                    }
                )
                show = state.strategy.shows_explanations
                explanation = None
                if show and item.explanation is not None:
                    explanation = {
                        "width": item.explanation.width,
                        "height": item.explanation.height,
                        "values": item.explanation.values.tolist(),
                    }
                state.last_feedback_at = now
                state.advance(self.config.teach_len, self.config.test_len)
                return {
                    "phase": PHASE_TEACHING,
                    "index": index,
                    "correct": correct,
                    "correct_class": item.class_index,
                    "correct_class_name": self.dataset.classes[item.class_index],
                    "show_explanation": show,
                    "explanation": explanation,
                    "image_uri": item.image_uri,
                    "alternate_ms": self.config.alternate_ms,
                    "min_wait_ms": self.config.min_wait_ms,
                }
            # testing phase: acknowledge only, never reveal correctness
            item = self._test_item(state, index)
            correct = choice == item.class_index
            self._append_event(
                session_id,
                {
                    "event": "response",
                    "phase": PHASE_TESTING,
                    "index": index,
                    "item_id": item.id,
                    "choice": choice,
                    "correct": correct,
                    "timestamp": now,
                },
            )
            state.responses.append(
                {
                    "phase": PHASE_TESTING,
                    "index": index,
                    "item_id": item.id,
                    "choice": choice,
                    "correct": correct,
                    "timestamp": now,
                }
            )
            state.last_feedback_at = None
            state.advance(self.config.teach_len, self.config.test_len)
            return {"acknowledged": True}

    def _accuracy(self, state: SessionState) -> float:
        test_responses = [r for r in state.responses if r["phase"] == PHASE_TESTING]
        correct = sum(1 for r in test_responses if r["correct"])
        return correct / self.config.test_len

    def result(self, session_id: str) -> dict:
        state = self._session(session_id)
        with state.lock:
            if state.phase != PHASE_DONE:
                raise ServiceError(
                    "not_finished", f"session is in phase {state.phase}", 409
                )
            c_count = self.dataset.num_classes
            confusion = [[0] * c_count for _ in range(c_count)]
            for r in state.responses:
                if r["phase"] != PHASE_TESTING:
                    continue
                truth = self.dataset.item_by_id(r["item_id"]).class_index
                confusion[truth][r["choice"]] += 1
            return {
                "session_id": session_id,
                "strategy": state.strategy.value,
                "accuracy": self._accuracy(state),
                "confusion": confusion,
                "responses": list(state.responses),
            }


def create_app(service: SessionService):
    """FastAPI wrapper exposing the HTTP+JSON interface."""
    from fastapi import FastAPI, Request
    from fastapi.responses import FileResponse, JSONResponse

    app = FastAPI(title="teaching sessions")
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status, content={"error": exc.code, "message": exc.message}
        )

    @app.post("/api/sessions", status_code=201)
    async def create_session(body: dict):
        strategy = body.get("strategy", "random")
        return service.create_session(strategy)

    @app.get("/api/sessions/{session_id}/next")
    async def next_item(session_id: str):
        return service.next_item(session_id)

    @app.post("/api/sessions/{session_id}/respond")
    async def respond(session_id: str, body: dict):
        try:
            index = int(body["index"])
            choice = int(body["choice"])
        except (KeyError, TypeError, ValueError):
            raise ServiceError("invalid_choice", "body needs integer index and choice", 400)
        return service.respond(session_id, index, choice)

    @app.get("/api/sessions/{session_id}/result")
    async def result(session_id: str):
        return service.result(session_id)

    @app.get("/assets/{asset_path:path}")
    async def assets(asset_path: str):
        if service.config.assets_dir is None:
            raise ServiceError("not_found", "no assets directory configured", 404)
        root = Path(service.config.assets_dir).resolve()
        target = (root / asset_path).resolve()
        if not target.is_relative_to(root) or not target.is_file():
            raise ServiceError("not_found", f"no asset {asset_path!r}", 404)
        return FileResponse(target)

    return app
