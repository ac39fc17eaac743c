"""Event-sourced state for the blinded real-vs-fake study.

Every mutation appends one JSON line to the log and is flushed to disk before
it is acknowledged, so a crash-and-restart replay reconstructs exactly the
acknowledged state. Trial orders are balanced across sources (per-session
counts differ by at most one) and derive deterministically from (study,
alias, seed). Respondent-facing payloads never carry source labels; images
are re-encoded to PNG under opaque trial ids so filenames cannot leak either.
"""

from __future__ import annotations

import io
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

_IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}
VERDICTS = ("real", "fake")


class StudyError(RuntimeError):
    pass


class NotFoundError(StudyError):
    pass


class ConflictError(StudyError):
    pass


class PreconditionError(StudyError):
    pass


@dataclass
class Trial:
    trial_id: str
    source_label: str
    image_path: str  # absolute path on the serving host; never sent to clients
    verdict: str | None = None


@dataclass
class Session:
    session_id: str
    study_id: str
    alias: str
    seed: int
    trials: list = field(default_factory=list)

    @property
    def judged_count(self) -> int:
        return sum(1 for t in self.trials if t.verdict is not None)

    @property
    def complete(self) -> bool:
        return self.judged_count == len(self.trials)

    def current_index(self) -> int | None:
        for i, t in enumerate(self.trials):
            if t.verdict is None:
                return i
        return None


@dataclass
class Study:
    study_id: str
    name: str
    sources: dict  # label -> directory
    trials_per_session: int
    created_at: str


def _list_images(directory: Path) -> list:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in _IMAGE_EXTENSIONS)


class StudyStore:
    """Single-writer store over an append-only JSONL event log."""

    def __init__(self, log_path):
        self.log_path = Path(log_path)
        self._lock = threading.Lock()
        self.studies: dict[str, Study] = {}
        self.sessions: dict[str, Session] = {}
        self._session_by_alias: dict[tuple, str] = {}
        self._counter = 0
        if self.log_path.exists():
            self._replay()

    # ------------------------------------------------------------------ log

    def _append(self, event: dict) -> None:
        line = json.dumps(event, separators=(",", ":")) + "\n"
        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write(line)
            f.flush()
            os.fsync(f.fileno())

    def _replay(self) -> None:
        with open(self.log_path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                self._apply(event, replay=True)

    def _apply(self, event: dict, replay: bool) -> None:
        kind = event["event"]
        if kind == "study_created":
            study = Study(
                study_id=event["study_id"],
                name=event["name"],
                sources=dict(event["sources"]),
                trials_per_session=event["trials_per_session"],
                created_at=event["created_at"],
            )
            self.studies[study.study_id] = study
        elif kind == "session_opened":
            session = Session(
                session_id=event["session_id"],
                study_id=event["study_id"],
                alias=event["alias"],
                seed=event["seed"],
                trials=[Trial(trial_id=t["trial_id"], source_label=t["source"],
                              image_path=t["path"]) for t in event["trials"]],
            )
            self.sessions[session.session_id] = session
            self._session_by_alias[(session.study_id, session.alias)] = session.session_id
        elif kind == "judgment":
            session = self.sessions[event["session_id"]]
            session.trials[event["trial_index"]].verdict = event["verdict"]
        else:
            raise StudyError(f"unknown event type {kind!r} in log")
        self._counter += 1

    def _record(self, event: dict) -> None:
        """Persist first, then mutate in-memory state (ack implies durability)."""
        self._append(event)
        self._apply(event, replay=False)

    def _new_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter:06d}{os.urandom(4).hex()}"

    # ------------------------------------------------------------------ studies

    def create_study(self, name: str, sources: dict, trials_per_session: int) -> Study:
        with self._lock:
            if len(sources) < 2:
                raise StudyError(f"a study needs at least 2 sources, got {len(sources)}")
            if trials_per_session < 1:
                raise StudyError("trials_per_session must be >= 1")
            resolved = {}
            for label, directory in sources.items():
                d = Path(directory)
                if not d.is_dir() or not _list_images(d):
                    raise StudyError(f"source {label!r}: {d} has no images")
                resolved[label] = str(d.resolve())
            study_id = self._new_id("st")
            self._record({
                "event": "study_created",
                "study_id": study_id,
                "name": name,
                "sources": resolved,
                "trials_per_session": trials_per_session,
                "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            })
            return self.studies[study_id]

    def get_study(self, study_id: str) -> Study:
        try:
            return self.studies[study_id]
        except KeyError:
            raise NotFoundError(f"unknown study {study_id!r}") from None

    # ------------------------------------------------------------------ sessions

    @staticmethod
    def _stable_hash(text: str) -> int:
        h = 2166136261
        for ch in text.encode("utf-8"):
            h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
        return h

    def _plan_trials(self, study: Study, alias: str, seed: int) -> list:
        rng = np.random.default_rng(
            [seed & 0xFFFFFFFF, self._stable_hash(alias), self._stable_hash(study.study_id)])
        labels = sorted(study.sources)
        total = study.trials_per_session
        base, extra = divmod(total, len(labels))
        counts = {label: base for label in labels}
        for label in rng.permutation(labels)[:extra]:
            counts[str(label)] += 1
        picks = []
        for label in labels:
            images = _list_images(Path(study.sources[label]))
            need = counts[label]
            if need <= len(images):
                chosen = rng.choice(len(images), size=need, replace=False)
            else:
                chosen = rng.integers(0, len(images), size=need)
            picks.extend((label, str(images[int(i)])) for i in chosen)
        order = rng.permutation(len(picks))
        return [
            {"trial_id": rng.bytes(8).hex(), "source": picks[int(i)][0], "path": picks[int(i)][1]}
            for i in order
        ]

    def open_session(self, study_id: str, alias: str, seed: int = 0) -> Session:
        """Open (or resume) the session for this respondent alias.

        Reopening an existing alias returns the stored session unchanged, so a
        respondent can continue after a refresh or a server restart.
        """
        with self._lock:
            study = self.get_study(study_id)
            existing = self._session_by_alias.get((study_id, alias))
            if existing is not None:
                return self.sessions[existing]
            trials = self._plan_trials(study, alias, seed)
            session_id = self._new_id("se")
            self._record({
                "event": "session_opened",
                "session_id": session_id,
                "study_id": study_id,
                "alias": alias,
                "seed": seed,
                "trials": trials,
            })
            return self.sessions[session_id]

    def get_session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NotFoundError(f"unknown session {session_id!r}") from None

    # ------------------------------------------------------------------ trials

    def next_trial(self, session_id: str):
        """(trial_number 1-based, total, trial_id, png_bytes) or None when done."""
        session = self.get_session(session_id)
        idx = session.current_index()
        if idx is None:
            return None
        trial = session.trials[idx]
        with Image.open(trial.image_path) as im:
            rgb = im.convert("RGB")
            buf = io.BytesIO()
            rgb.save(buf, format="PNG")
        return idx + 1, len(session.trials), trial.trial_id, buf.getvalue()

    def submit_judgment(self, session_id: str, trial_id: str, verdict: str) -> Session:
        with self._lock:
            session = self.get_session(session_id)
            if verdict not in VERDICTS:
                raise StudyError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
            ids = [t.trial_id for t in session.trials]
            if trial_id not in ids:
                raise NotFoundError(f"unknown trial {trial_id!r}")
            idx = ids.index(trial_id)
            if session.trials[idx].verdict is not None:
                raise ConflictError(f"trial {trial_id!r} already judged")
            current = session.current_index()
            if idx != current:
                raise PreconditionError(
                    f"trial {trial_id!r} is not the current trial (expected #{current + 1})")
            self._record({
                "event": "judgment",
                "session_id": session_id,
                "trial_index": idx,
                "trial_id": trial_id,
                "verdict": verdict,
            })
            return session

    # ------------------------------------------------------------------ report

    def report(self, study_id: str) -> dict:
        """Judged-real rate per source; denominators count judged trials only."""
        study = self.get_study(study_id)
        per_source = {label: {"shown": 0, "judged_real": 0} for label in study.sources}
        respondents = []
        for session in self.sessions.values():
            if session.study_id != study_id:
                continue
            judged = 0
            judged_real = 0
            for t in session.trials:
                if t.verdict is None:
                    continue
                judged += 1
                per_source[t.source_label]["shown"] += 1
                if t.verdict == "real":
                    per_source[t.source_label]["judged_real"] += 1
                    judged_real += 1
            respondents.append({
                "alias": session.alias,
                "judged": judged,
                "total": len(session.trials),
                "complete": session.complete,
                "judged_real_rate": 100.0 * judged_real / judged if judged else None,
            })
        sources = {}
        for label, stats in per_source.items():
            rate = 100.0 * stats["judged_real"] / stats["shown"] if stats["shown"] else None
            sources[label] = {**stats, "judged_real_rate": rate}
        rates = [s["judged_real_rate"] for s in sources.values() if s["judged_real_rate"] is not None]
        return {
            "study_id": study_id,
            "name": study.name,
            "sources": sources,
            "respondents": sorted(respondents, key=lambda r: r["alias"]),
            "overall_judged_real_rate": float(np.mean(rates)) if rates else None,
        }
