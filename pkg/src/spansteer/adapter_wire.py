"""Wire protocol for out-of-process QG/QA adapters.

Requests and responses are single-line JSON, over either a child process's
stdin/stdout or HTTP POST:

    {"op": "generate", "sentence": ..., "answer": ...} -> {"question": ...}
    {"op": "answer", "question": ..., "context": ...}
        -> {"answerable": bool, "answer": str, "confidence": float}

Running ``python -m spansteer.adapter_wire`` serves the deterministic stubs
over stdio, which is also how the protocol is exercised in tests. When
SPANSTEER_CACHE is set, wire clients memoize responses on disk there.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import subprocess
import sys
import threading
import urllib.request
from pathlib import Path
from typing import IO

from .config import cache_dir
from .qa import (
    AdapterError,
    LexicalStubAnswerer,
    QAPrediction,
    QuestionAnswerer,
    QuestionGenerator,
    TemplateStubGenerator,
)


def handle_request(request: dict, qg: QuestionGenerator,
                   qa: QuestionAnswerer) -> dict:
    op = request.get("op")
    if op == "generate":
        sentence, answer = request["sentence"], request["answer"]
        # The wire format carries no offsets; recover them by substring match.
        idx = sentence.find(answer)
        offsets = (idx, idx + len(answer)) if idx >= 0 else (0, 0)
        question = qg.generate(sentence, answer, offsets)
        return {"question": question}
    if op == "answer":
        pred = qa.answer(request["question"], request["context"])
        return {"answerable": pred.is_answerable, "answer": pred.answer_text,
                "confidence": pred.confidence}
    return {"error": f"unknown op {op!r}"}


def serve_stdio(qg: QuestionGenerator, qa: QuestionAnswerer,
                stdin: IO[str] | None = None, stdout: IO[str] | None = None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            response = handle_request(json.loads(line), qg, qa)
        except Exception as exc:  # report, keep serving
            response = {"error": str(exc)}
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()


class _ResponseCache:
    """Append-only JSONL memo of wire responses under SPANSTEER_CACHE."""

    def __init__(self, name: str):
        base = cache_dir()
        self._path: Path | None = None
        self._memo: dict[str, dict] = {}
        if base is not None:
            base.mkdir(parents=True, exist_ok=True)
            self._path = base / f"{name}.jsonl"
            if self._path.exists():
                for line in self._path.read_text().splitlines():
                    if line.strip():
                        entry = json.loads(line)
                        self._memo[entry["key"]] = entry["response"]

    @staticmethod
    def key(request: dict) -> str:
        canonical = json.dumps(request, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def get(self, request: dict) -> dict | None:
        return self._memo.get(self.key(request))

    def put(self, request: dict, response: dict) -> None:
        key = self.key(request)
        self._memo[key] = response
        if self._path is not None:
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "response": response}) + "\n")


class _Transport:
    def request(self, payload: dict) -> dict:
        raise NotImplementedError


class ProcessTransport(_Transport):
    """One child process per transport; requests serialized under a lock."""

    def __init__(self, command: str):
        self._proc = subprocess.Popen(
            shlex.split(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1)
        self._lock = threading.Lock()

    def request(self, payload: dict) -> dict:
        with self._lock:
            if self._proc.poll() is not None:
                raise AdapterError("adapter process exited "
                                   f"(code {self._proc.returncode})")
            assert self._proc.stdin and self._proc.stdout
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        if not line:
            raise AdapterError("adapter process closed its output")
        response = json.loads(line)
        if "error" in response:
            raise AdapterError(response["error"])
        return response

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            self._proc.wait(timeout=5)


class HTTPTransport(_Transport):
    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def request(self, payload: dict) -> dict:
        data = json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(self.url, data=data,
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                response = json.loads(resp.read().decode("utf-8"))
        except OSError as exc:
            raise AdapterError(f"adapter HTTP request failed: {exc}") from exc
        if "error" in response:
            raise AdapterError(response["error"])
        return response


def _make_transport(spec: str) -> _Transport:
    if spec.startswith("cmd:"):
        return ProcessTransport(spec[len("cmd:"):])
    if spec.startswith("http:") or spec.startswith("https:"):
        return HTTPTransport(spec)
    raise AdapterError(f"unknown adapter spec {spec!r}")


class WireQuestionGenerator:
    max_concurrency = 1

    def __init__(self, transport: _Transport):
        self._transport = transport
        self._cache = _ResponseCache("qg")

    def generate(self, sentence_text: str, answer_text: str,
                 answer_char_offsets: tuple[int, int]) -> str:
        request = {"op": "generate", "sentence": sentence_text,
                   "answer": answer_text}
        response = self._cache.get(request)
        if response is None:
            response = self._transport.request(request)
            self._cache.put(request, response)
        return response["question"]


class WireQuestionAnswerer:
    max_concurrency = 1

    def __init__(self, transport: _Transport):
        self._transport = transport
        self._cache = _ResponseCache("qa")

    def answer(self, question: str, context_text: str) -> QAPrediction:
        request = {"op": "answer", "question": question, "context": context_text}
        response = self._cache.get(request)
        if response is None:
            response = self._transport.request(request)
            self._cache.put(request, response)
        return QAPrediction(is_answerable=bool(response["answerable"]),
                            answer_text=response["answer"],
                            confidence=float(response["confidence"]))


def wire_question_generator(spec: str) -> WireQuestionGenerator:
    return WireQuestionGenerator(_make_transport(spec))


def wire_question_answerer(spec: str) -> WireQuestionAnswerer:
    return WireQuestionAnswerer(_make_transport(spec))


def main() -> None:
    serve_stdio(TemplateStubGenerator(), LexicalStubAnswerer())


if __name__ == "__main__":
    main()
