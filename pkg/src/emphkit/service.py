"""Local HTTP service that administers listening tests.

Serves blinded stimuli for MUSHRA / preference / word-identification
screens, with per-listener deterministic screen order, and persists every
response to an append-only JSONL log (fsync before acknowledgment). System
identities and correct answers live only in the plan on the server side;
no client-visible payload ever contains them.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .evalstats import ratings_from_responses

MUSHRA = "mushra"
PREFERENCE = "preference"
IDENTIFY = "identify"
TEST_TYPES = (MUSHRA, PREFERENCE, IDENTIFY)


@dataclass(frozen=True)
class Stimulus:
    stimulus_id: str
    system: str
    path: Path


@dataclass(frozen=True)
class Screen:
    screen_id: str
    utterance_id: str
    stimuli: tuple[Stimulus, ...]
    correct_word: Optional[int] = None
    words: tuple[str, ...] = ()


@dataclass(frozen=True)
class TestPlan:
    test_type: str
    seed: int
    screens: tuple[Screen, ...]


@dataclass
class Session:
    session_id: str
    listener_id: str
    screen_order: list[int]
    answered: set[str] = field(default_factory=set)


def load_plan(path: str | Path, stimuli_root: Optional[Path] = None) -> TestPlan:
    """Read and validate a test plan; shuffles each screen's stimulus order
    deterministically from the plan seed."""
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    test_type = doc.get("test_type")
    if test_type not in TEST_TYPES:
        raise ValueError(f"test_type must be one of {TEST_TYPES}, got {test_type!r}")
    seed = int(doc.get("seed", 0))
    root = stimuli_root if stimuli_root is not None else path.parent
    screens = []
    for i, sdoc in enumerate(doc.get("screens", [])):
        stimuli = [
            Stimulus(
                stimulus_id=str(st["stimulus_id"]),
                system=str(st["system"]),
                path=(root / st["path"]).resolve(),
            )
            for st in sdoc["stimuli"]
        ]
        rng = random.Random(f"{seed}|screen|{i}")
        rng.shuffle(stimuli)
        if test_type == MUSHRA and len(stimuli) < 2:
            raise ValueError(f"screen {i}: MUSHRA needs at least 2 stimuli")
        if test_type == PREFERENCE and len(stimuli) != 2:
            raise ValueError(f"screen {i}: preference needs exactly 2 stimuli")
        correct = sdoc.get("correct_word")
        words = tuple(sdoc.get("words", ()))
        if test_type == IDENTIFY:
            if len(stimuli) != 1:
                raise ValueError(f"screen {i}: identify needs exactly 1 stimulus")
            if correct is None or not words:
                raise ValueError(f"screen {i}: identify needs correct_word and words")
            if not (0 <= int(correct) < len(words)):
                raise ValueError(f"screen {i}: correct_word out of range")
        screens.append(
            Screen(
                screen_id=str(sdoc.get("screen_id", f"screen_{i:03d}")),
                utterance_id=str(sdoc.get("utterance_id", f"utt_{i:03d}")),
                stimuli=tuple(stimuli),
                correct_word=correct,
                words=words,
            )
        )
    if not screens:
        raise ValueError("plan has no screens")
    ids = [s.screen_id for s in screens]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate screen ids")
    return TestPlan(test_type, seed, tuple(screens))


class ResponseLog:
    """Append-only JSONL response store; append is fsynced before returning."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.seen: set[tuple[str, str]] = set()
        if self.path.exists():
            for row in self._read_rows():
                self.seen.add((row["session"], row["screen"]))

    def _read_rows(self) -> list[dict]:
        rows = []
        with self.path.open(encoding="utf-8") as fp:
            for line in fp:
                line = line.strip()
                if line:
                    rows.append(json.loads(line))
        return rows

    def append(self, row: dict) -> None:
        key = (row["session"], row["screen"])
        with self._lock:
            if key in self.seen:
                raise KeyError("duplicate response for this screen")
            with self.path.open("a", encoding="utf-8") as fp:
                fp.write(json.dumps(row, sort_keys=True) + "\n")
                fp.flush()
                os.fsync(fp.fileno())
            self.seen.add(key)

    def rows(self) -> list[dict]:
        with self._lock:
            if not self.path.exists():
                return []
            return self._read_rows()


class ListeningTestService:
    def __init__(self, plan: TestPlan, log: ResponseLog):
        self.plan = plan
        self.log = log
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        for stim in (s for screen in plan.screens for s in screen.stimuli):
            if not stim.path.is_file():
                raise FileNotFoundError(f"stimulus file missing: {stim.path}")
        self.stimuli = {
            s.stimulus_id: s for screen in plan.screens for s in screen.stimuli
        }
        if len(self.stimuli) != sum(len(s.stimuli) for s in plan.screens):
            raise ValueError("stimulus ids must be unique across the plan")

    def create_session(self, listener_id: str) -> Session:
        session_id = hashlib.sha256(
            f"{self.plan.seed}|{listener_id}".encode()
        ).hexdigest()[:16]
        with self._lock:
            existing = self.sessions.get(session_id)
            if existing is not None:
                return existing
            order = list(range(len(self.plan.screens)))
            random.Random(f"{self.plan.seed}|order|{listener_id}").shuffle(order)
            session = Session(session_id, listener_id, order)
            for screen in self.plan.screens:
                if (session_id, screen.screen_id) in self.log.seen:
                    session.answered.add(screen.screen_id)
            self.sessions[session_id] = session
            return session

    def screen_view(self, session: Session, position: int) -> dict:
        if not (0 <= position < len(session.screen_order)):
            raise IndexError(f"screen position {position} out of range")
        screen = self.plan.screens[session.screen_order[position]]
        view = {
            "position": position,
            "n_screens": len(session.screen_order),
            "screen_id": screen.screen_id,
            "utterance_id": screen.utterance_id,
            "test_type": self.plan.test_type,
            "stimuli": [
                {"id": s.stimulus_id, "url": f"/audio/{s.stimulus_id}.wav"}
                for s in screen.stimuli
            ],
            "answered": screen.screen_id in session.answered,
        }
        if self.plan.test_type == IDENTIFY:
            view["words"] = list(screen.words)
        return view

    def _validate_payload(self, screen: Screen, payload: dict) -> dict:
        test_type = self.plan.test_type
        if test_type == MUSHRA:
            ratings = payload.get("ratings")
            if not isinstance(ratings, dict):
                raise ValueError("mushra payload needs a 'ratings' object")
            expected = {s.stimulus_id for s in screen.stimuli}
            if set(ratings) != expected:
                raise ValueError("ratings must cover exactly this screen's stimuli")
            clean = {}
            for sid, value in ratings.items():
                value = float(value)
                if not (0.0 <= value <= 100.0):
                    raise ValueError(f"rating {value} outside [0, 100]")
                clean[sid] = value
            return {"ratings": clean}
        if test_type == PREFERENCE:
            choice = payload.get("choice")
            if choice not in {s.stimulus_id for s in screen.stimuli}:
                raise ValueError("choice must name one of the screen's stimuli")
            return {"choice": choice}
        chosen = payload.get("chosen_word")
        if not isinstance(chosen, int) or not (0 <= chosen < len(screen.words)):
            raise ValueError(
                f"chosen_word must be an integer in [0, {len(screen.words)})"
            )
        return {"chosen_word": chosen}

    def record_response(
        self, session_id: str, screen_id: str, payload: dict
    ) -> dict:
        with self._lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(f"unknown session {session_id}")
        by_id = {s.screen_id: s for s in self.plan.screens}
        screen = by_id.get(screen_id)
        if screen is None:
            raise KeyError(f"unknown screen {screen_id}")
        clean = self._validate_payload(screen, payload)
        row = {
            "session": session_id,
            "listener": session.listener_id,
            "screen": screen_id,
            "test_type": self.plan.test_type,
            "payload": clean,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        self.log.append(row)  # raises KeyError on duplicates
        session.answered.add(screen_id)
        return {"status": "ok", "screen_id": screen_id}

    def export_results(self, test_type: str) -> dict:
        if test_type != self.plan.test_type:
            raise ValueError(
                f"plan is a {self.plan.test_type} test, not {test_type}"
            )
        rows = [r for r in self.log.rows() if r["test_type"] == test_type]
        screens = {s.screen_id: s for s in self.plan.screens}
        if test_type == MUSHRA:
            out = []
            for r in rows:
                screen = screens[r["screen"]]
                unblinded = {
                    self.stimuli[sid].system: value
                    for sid, value in r["payload"]["ratings"].items()
                }
                out.append(
                    {
                        "listener": r["listener"],
                        "screen": r["screen"],
                        "ratings": unblinded,
                    }
                )
            excluded: list[str] = []
            if out:
                _, excluded = ratings_from_responses(out)
                out = [r for r in out if r["listener"] not in set(excluded)]
            return {"test_type": MUSHRA, "rows": out, "excluded_listeners": excluded}
        if test_type == PREFERENCE:
            out = [
                {
                    "listener": r["listener"],
                    "screen": r["screen"],
                    "choice": self.stimuli[r["payload"]["choice"]].system,
                }
                for r in rows
            ]
            return {"test_type": PREFERENCE, "rows": out}
        out = []
        for r in rows:
            screen = screens[r["screen"]]
            out.append(
                {
                    "listener": r["listener"],
                    "utterance": screen.utterance_id,
                    "true_word": screen.correct_word,
                    "chosen_word": r["payload"]["chosen_word"],
                    "system": screen.stimuli[0].system,
                }
            )
        return {"test_type": IDENTIFY, "rows": out}


def create_app(
    plan_path: str | Path,
    log_path: str | Path,
    stimuli_root: Optional[str | Path] = None,
    static_dir: Optional[str | Path] = None,
) -> FastAPI:
    plan = load_plan(plan_path, Path(stimuli_root) if stimuli_root else None)
    service = ListeningTestService(plan, ResponseLog(log_path))
    app = FastAPI(title="emphkit listening test")
    app.state.service = service

    def error(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(
            status_code=status, content={"code": code, "message": message}
        )

    @app.get("/api/session")
    def get_session(listener: str = ""):
        if not listener:
            return error(400, "missing_listener", "listener query parameter required")
        session = service.create_session(listener)
        return {
            "session_id": session.session_id,
            "listener_id": session.listener_id,
            "test_type": service.plan.test_type,
            "n_screens": len(session.screen_order),
            "answered_screens": sorted(session.answered),
        }

    @app.get("/api/screen/{position}")
    def get_screen(position: int, session: str = ""):
        state = service.sessions.get(session)
        if state is None:
            return error(404, "unknown_session", f"no session {session!r}")
        try:
            return service.screen_view(state, position)
        except IndexError as exc:
            return error(404, "bad_screen", str(exc))

    @app.get("/audio/{stimulus_id}.wav")
    def get_audio(stimulus_id: str):
        stim = service.stimuli.get(stimulus_id)
        if stim is None:
            return error(404, "unknown_stimulus", f"no stimulus {stimulus_id!r}")
        return FileResponse(stim.path, media_type="audio/wav")

    @app.post("/api/response")
    async def post_response(body: dict):
        session_id = str(body.get("session", ""))
        screen_id = str(body.get("screen", ""))
        payload = body.get("payload")
        if not isinstance(payload, dict):
            return error(400, "bad_payload", "payload object required")
        try:
            return service.record_response(session_id, screen_id, payload)
        except KeyError as exc:
            message = str(exc).strip("'")
            status = 409 if "duplicate" in message else 404
            return error(status, "rejected", message)
        except ValueError as exc:
            return error(400, "invalid", str(exc))

    @app.get("/api/export/{test_type}")
    def get_export(test_type: str):
        try:
            return service.export_results(test_type)
        except ValueError as exc:
            return error(400, "bad_test_type", str(exc))

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return {
                "service": "emphkit listening test",
                "test_type": service.plan.test_type,
                "endpoints": [
                    "/api/session?listener=ID",
                    "/api/screen/{n}?session=SID",
                    "/audio/{stimulus_id}.wav",
                    "/api/response",
                    "/api/export/{test_type}",
                ],
            }

    return app
