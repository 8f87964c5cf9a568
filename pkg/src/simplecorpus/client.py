"""Client for the external scoring process.

Wire protocol: newline-delimited JSON over the stdio of a spawned
subprocess or a TCP connection. Requests carry a client-chosen integer id;
responses echo it and may arrive in any order:

    {"id": 7, "type": "complexity", "text": "...", "span": [start, len]}
    {"id": 8, "type": "similarity", "pair": ["...", "..."]}
    {"id": 8, "score": 0.97}

A batch is sent as one line per request, then lines are consumed until
every id is resolved. On timeout the whole batch is retried with fresh
ids; the old ids go into an abandoned set so a late reply cannot be
mistaken for an answer to a new request. Scores outside [0, 1] and
responses for ids never issued are protocol violations (fatal), as is
exhausting the retry budget.

The client is thread-safe by serializing batches under one lock; workers
share a single client and rely on batching, not interleaving, for
throughput.
"""

from __future__ import annotations

import json
import logging
import math
import socket
import subprocess
import threading
import time
from queue import Empty, Queue
from typing import Sequence

from .errors import ScorerError, ScorerProtocolError, ScorerRecordError, ScorerTimeoutError

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0
DEFAULT_RETRIES = 2

_EOF = object()


class _BatchTimeout(Exception):
    def __init__(self, pending: set[int]):
        super().__init__(f"{len(pending)} responses still pending")
        self.pending = pending


class _LineTransport:
    """Common shape: a writer plus a reader thread feeding a line queue."""

    def __init__(self):
        self._lines: Queue = Queue()

    def _pump(self, stream) -> None:
        try:
            for line in stream:
                self._lines.put(line)
        except (OSError, ValueError):
            pass
        self._lines.put(_EOF)

    def recv_line(self, timeout: float) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except Empty:
            raise _BatchTimeout(set()) from None
        if line is _EOF:
            raise ScorerError("scorer connection closed")
        return line

    def send_line(self, line: str) -> None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class _StdioTransport(_LineTransport):
    def __init__(self, cmd: Sequence[str]):
        super().__init__()
        try:
            self._proc = subprocess.Popen(
                list(cmd),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ScorerError(f"could not spawn scorer {cmd!r}: {exc}") from exc
        self._reader = threading.Thread(
            target=self._pump, args=(self._proc.stdout,), daemon=True
        )
        self._reader.start()

    def send_line(self, line: str) -> None:
        if self._proc.poll() is not None:
            raise ScorerError(f"scorer process exited with code {self._proc.returncode}")
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ScorerError(f"scorer process pipe closed: {exc}") from exc

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class _TcpTransport(_LineTransport):
    def __init__(self, host: str, port: int, connect_timeout: float = 10.0):
        super().__init__()
        try:
            self._sock = socket.create_connection((host, port), timeout=connect_timeout)
        except OSError as exc:
            raise ScorerError(f"could not connect to scorer at {host}:{port}: {exc}") from exc
        self._sock.settimeout(None)
        self._file = self._sock.makefile("r", encoding="utf-8")
        self._reader = threading.Thread(target=self._pump, args=(self._file,), daemon=True)
        self._reader.start()

    def send_line(self, line: str) -> None:
        try:
            self._sock.sendall((line + "\n").encode("utf-8"))
        except OSError as exc:
            raise ScorerError(f"scorer connection lost: {exc}") from exc

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class ExternalScorerClient:
    """Batched, retrying protocol client; one instance is shared by all
    pipeline workers."""

    def __init__(
        self,
        transport: _LineTransport,
        timeout: float = DEFAULT_TIMEOUT,
        max_retries: int = DEFAULT_RETRIES,
    ):
        self._transport = transport
        self.timeout = timeout
        self.max_retries = max_retries
        self._lock = threading.Lock()
        self._next_id = 0
        self._abandoned: set[int] = set()

    @classmethod
    def spawn(cls, cmd: Sequence[str], **kwargs) -> "ExternalScorerClient":
        return cls(_StdioTransport(cmd), **kwargs)

    @classmethod
    def connect(cls, host: str, port: int, **kwargs) -> "ExternalScorerClient":
        return cls(_TcpTransport(host, port), **kwargs)

    def __enter__(self) -> "ExternalScorerClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        self._transport.close()

    def score_complexity(self, items: Sequence[tuple[str, tuple[int, int]]]) -> list[float]:
        """items: (sentence text, (span start, span len)) per request."""
        return self._score(
            [
                {"type": "complexity", "text": text, "span": [int(start), int(length)]}
                for text, (start, length) in items
            ]
        )

    def score_similarity(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return self._score([{"type": "similarity", "pair": [a, b]} for a, b in pairs])

    def _score(self, bodies: list[dict]) -> list[float]:
        if not bodies:
            return []
        with self._lock:
            attempts = self.max_retries + 1
            for attempt in range(1, attempts + 1):
                requests = []
                for body in bodies:
                    requests.append({"id": self._next_id, **body})
                    self._next_id += 1
                try:
                    scores = self._roundtrip(requests)
                except _BatchTimeout as exc:
                    self._abandoned.update(exc.pending)
                    log.warning(
                        "scorer batch of %d timed out after %.1fs (attempt %d/%d)",
                        len(bodies),
                        self.timeout,
                        attempt,
                        attempts,
                    )
                    continue
                return [scores[req["id"]] for req in requests]
        raise ScorerTimeoutError(
            f"scorer gave no complete response for a batch of {len(bodies)} "
            f"after {attempts} attempts"
        )

    def _roundtrip(self, requests: list[dict]) -> dict[int, float]:
        pending = {req["id"] for req in requests}
        scores: dict[int, float] = {}
        try:
            for req in requests:
                self._transport.send_line(json.dumps(req))
            deadline = time.monotonic() + self.timeout
            while pending:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise _BatchTimeout(pending)
                try:
                    line = self._transport.recv_line(remaining)
                except _BatchTimeout:
                    raise _BatchTimeout(pending) from None
                self._consume(line, pending, scores)
        except _BatchTimeout:
            raise
        except Exception:
            # abort leaves unresolved ids in flight; their late replies
            # must not look like answers to a future batch
            self._abandoned.update(pending)
            raise
        return scores

    def _consume(self, line: str, pending: set[int], scores: dict[int, float]) -> None:
        line = line.strip()
        if not line:
            return
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            log.warning("scorer sent unparseable line: %.80r", line)
            return
        if not isinstance(msg, dict) or not isinstance(msg.get("id"), int):
            log.warning("scorer sent malformed response: %.80r", line)
            return
        rid = msg["id"]
        if rid in self._abandoned:
            self._abandoned.discard(rid)
            return
        if rid not in pending:
            raise ScorerProtocolError(f"response for unknown request id {rid}")
        if "error" in msg:
            pending.discard(rid)
            raise ScorerRecordError(f"scorer rejected request {rid}: {msg['error']}")
        score = msg.get("score")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ScorerProtocolError(f"non-numeric score in response {rid}: {score!r}")
        score = float(score)
        if math.isnan(score) or not 0.0 <= score <= 1.0:
            raise ScorerProtocolError(f"score out of [0, 1] in response {rid}: {score}")
        scores[rid] = score
        pending.discard(rid)
