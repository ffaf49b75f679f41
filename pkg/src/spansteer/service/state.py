"""In-memory session store for the control service.

Sessions are content-addressed by the analyzed text, so re-analyzing the
same text returns an identical payload. No persistence: the service is an
exploratory tool, and sessions expire after a TTL.
"""

from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass, field

from ..classifier import SpanScore
from ..corpus import Document


def session_id_for(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class Session:
    session_id: str
    document: Document
    spans: list[SpanScore]
    created_at: float = field(default_factory=time.monotonic)
    touched_at: float = field(default_factory=time.monotonic)


class SessionStore:
    def __init__(self, ttl_seconds: float = 1800.0):
        self.ttl = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _purge(self, now: float) -> None:
        expired = [sid for sid, s in self._sessions.items()
                   if now - s.touched_at > self.ttl]
        for sid in expired:
            del self._sessions[sid]

    def put(self, session: Session) -> None:
        with self._lock:
            self._purge(time.monotonic())
            self._sessions[session.session_id] = session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            now = time.monotonic()
            self._purge(now)
            session = self._sessions.get(session_id)
            if session is not None:
                session.touched_at = now
            return session

    def __len__(self) -> int:
        with self._lock:
            return len(self._sessions)
