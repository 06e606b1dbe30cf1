"""Client side of the black-box model protocol (see protocol/PROTOCOL.md).

Newline-delimited JSON messages travel over a subprocess's stdio or as
HTTP POST bodies.  The server exposes per-token predictions with raw
scores and, optionally, POS tagging and sentence-pair similarity.
"""

from __future__ import annotations

import json
import logging
import os
import select
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import AdapterError, ConfigurationError, ProtocolError
from .labels import Label, argmax_label

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "1.0"
DEFAULT_BATCH_SIZE = 64
TIMEOUT_ENV = "NERBREAKER_TIMEOUT_MS"


def _timeout_seconds() -> float:
    return int(os.environ.get(TIMEOUT_ENV, "30000")) / 1000.0


@dataclass(frozen=True)
class TokenPrediction:
    """Predicted label plus the raw score of every label in the tag set."""

    predicted: Label
    scores: dict[Label, float]

    def score(self, label: Label) -> float:
        return self.scores[label]


class Transport:
    """One request message in, one reply message out."""

    def send(self, message: dict) -> dict:
        raise NotImplementedError

    def close(self) -> None:
        pass


class CallableTransport(Transport):
    """In-process transport wrapping a ``handler(request) -> reply`` function."""

    def __init__(self, handler: Callable[[dict], dict]):
        self._handler = handler

    def send(self, message: dict) -> dict:
        return self._handler(message)


class SubprocessTransport(Transport):
    """NDJSON over the stdio of a spawned server process."""

    def __init__(self, command: str):
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,
            )
        except OSError as exc:
            raise AdapterError(f"could not spawn adapter process: {exc}") from exc
        self._buffer = b""

    def send(self, message: dict) -> dict:
        if self._proc.poll() is not None:
            raise AdapterError("adapter process has exited")
        line = json.dumps(message, ensure_ascii=False).encode("utf-8") + b"\n"
        try:
            self._proc.stdin.write(line)
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise AdapterError(f"adapter process closed its stdin: {exc}") from exc
        raw = self._read_line(_timeout_seconds())
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"reply is not valid JSON: {exc}") from exc

    def _read_line(self, timeout: float) -> bytes:
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([fd], [], [], timeout)
            if not ready:
                raise AdapterError(f"adapter timed out after {timeout:.1f}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise AdapterError("adapter process closed its stdout")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


class HttpTransport(Transport):
    """One protocol message per HTTP POST, JSON body both ways."""

    def __init__(self, url: str):
        import requests

        self._url = url
        self._session = requests.Session()
        self._requests = requests

    def send(self, message: dict) -> dict:
        try:
            reply = self._session.post(
                self._url, json=message, timeout=_timeout_seconds()
            )
        except self._requests.RequestException as exc:
            raise AdapterError(f"HTTP adapter unreachable: {exc}") from exc
        try:
            return reply.json()
        except ValueError as exc:
            raise ProtocolError(f"reply is not valid JSON: {exc}") from exc

    def close(self) -> None:
        self._session.close()


@dataclass
class AdapterEndpoint:
    """A handshaken connection to one model server.

    Use from one logical task at a time; open one endpoint per worker for
    parallel attacks.  ``query_count`` tallies every sentence scored via
    :meth:`predict`, which is how attacks report their query budget.
    """

    transport: Transport
    tag_set: list[Label] = field(default_factory=list)
    capabilities: frozenset[str] = frozenset()
    model_id: str = "unknown"
    deterministic: bool = True
    batch_size: int = DEFAULT_BATCH_SIZE
    query_count: int = 0

    def handshake(self) -> None:
        reply = self._send({"op": "handshake"})
        version = str(reply.get("protocol", ""))
        if version.split(".")[0] != PROTOCOL_VERSION.split(".")[0]:
            raise ProtocolError(f"unsupported protocol version {version!r}")
        try:
            self.tag_set = [Label.parse(t) for t in reply["tag_set"]]
            self.capabilities = frozenset(reply["capabilities"])
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed handshake reply: {exc}") from exc
        if not self.tag_set or Label.parse("O") not in self.tag_set:
            raise ProtocolError("tag_set must be non-empty and contain O")
        if "predict" not in self.capabilities:
            raise ProtocolError("endpoint does not offer predict")
        self.model_id = str(reply.get("model_id", "unknown"))
        self.deterministic = bool(reply.get("deterministic", True))

    def predict(self, sentences: Sequence[Sequence[str]]) -> list[list[TokenPrediction]]:
        """Per-token predictions for a batch, order preserved."""
        results: list[list[TokenPrediction]] = []
        for start in range(0, len(sentences), self.batch_size):
            chunk = [list(s) for s in sentences[start : start + self.batch_size]]
            for sentence in chunk:
                if not sentence:
                    raise ValueError("cannot predict an empty sentence")
            reply = self._send({"op": "predict", "sentences": chunk})
            rows = reply.get("predictions")
            if not isinstance(rows, list) or len(rows) != len(chunk):
                raise ProtocolError(
                    f"predict reply has {len(rows) if isinstance(rows, list) else 'no'}"
                    f" rows for {len(chunk)} sentences"
                )
            for sentence, row in zip(chunk, rows):
                if len(row) != len(sentence):
                    raise ProtocolError(
                        f"{len(row)} predictions for {len(sentence)} tokens"
                    )
                results.append([self._parse_prediction(cell) for cell in row])
            self.query_count += len(chunk)
        return results

    def pos(self, sentences: Sequence[Sequence[str]]) -> list[list[str]]:
        if not sentences:
            return []
        if "pos" not in self.capabilities:
            raise ConfigurationError("endpoint does not offer POS tagging")
        results: list[list[str]] = []
        for start in range(0, len(sentences), self.batch_size):
            chunk = [list(s) for s in sentences[start : start + self.batch_size]]
            reply = self._send({"op": "pos", "sentences": chunk})
            tags = reply.get("tags")
            if not isinstance(tags, list) or len(tags) != len(chunk):
                raise ProtocolError("pos reply does not mirror the request")
            for sentence, row in zip(chunk, tags):
                if len(row) != len(sentence):
                    raise ProtocolError(f"{len(row)} tags for {len(sentence)} tokens")
                results.append([str(t) for t in row])
        return results

    def similarity(self, pairs: Sequence[tuple[Sequence[str], Sequence[str]]]) -> list[float]:
        if not pairs:
            return []
        if "similarity" not in self.capabilities:
            raise ConfigurationError("endpoint does not offer similarity")
        results: list[float] = []
        for start in range(0, len(pairs), self.batch_size):
            chunk = [[list(a), list(b)] for a, b in pairs[start : start + self.batch_size]]
            reply = self._send({"op": "similarity", "pairs": chunk})
            values = reply.get("similarities")
            if not isinstance(values, list) or len(values) != len(chunk):
                raise ProtocolError("similarity reply does not mirror the request")
            results.extend(float(v) for v in values)
        return results

    def close(self) -> None:
        self.transport.close()

    def _send(self, message: dict) -> dict:
        reply = self.transport.send(message)
        if not isinstance(reply, dict):
            raise ProtocolError("reply is not a JSON object")
        if not reply.get("ok", False):
            raise AdapterError(f"server error: {reply.get('error', 'unspecified')}")
        return reply

    def _parse_prediction(self, cell: dict) -> TokenPrediction:
        try:
            predicted = Label.parse(cell["label"])
            scores = {Label.parse(k): float(v) for k, v in cell["scores"].items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed prediction cell: {exc}") from exc
        if set(scores) != set(self.tag_set):
            raise ProtocolError("prediction scores do not cover the tag set")
        if argmax_label(scores, self.tag_set) != predicted:
            raise ProtocolError(
                f"predicted label {predicted} is not the argmax of its scores"
            )
        return TokenPrediction(predicted, scores)


def connect(address: str, batch_size: int = DEFAULT_BATCH_SIZE) -> AdapterEndpoint:
    """Open and handshake an endpoint.

    Address forms: ``exec:<command line>``, ``http:<url>`` and
    ``mock:<spec file>`` (in-process deterministic mock).
    """
    scheme, _, rest = address.partition(":")
    if not rest:
        raise ConfigurationError(f"bad adapter address {address!r}")
    if scheme == "exec":
        transport: Transport = SubprocessTransport(rest)
    elif scheme == "http":
        transport = HttpTransport(rest if "://" in rest else f"http://{rest}")
    elif scheme == "mock":
        from .mock import MockModelSpec, MockServer

        transport = CallableTransport(MockServer(MockModelSpec.load(rest)).handle)
    else:
        raise ConfigurationError(f"unknown adapter scheme {scheme!r}")
    endpoint = AdapterEndpoint(transport, batch_size=batch_size)
    endpoint.handshake()
    return endpoint


class SimilarityScorer:
    """Route sentence similarity to the endpoint, falling back to vectors.

    Identical token sequences score 1.0 without a round trip.  A remote
    failure logs a warning once and switches to the lexical fallback.
    """

    def __init__(self, endpoint: AdapterEndpoint | None = None, store=None):
        if endpoint is not None and "similarity" not in endpoint.capabilities:
            endpoint = None
        if endpoint is None and store is None:
            raise ConfigurationError(
                "sentence similarity needs an encoder endpoint or a vector store"
            )
        self._endpoint = endpoint
        self._store = store

    def similarity(self, a: Sequence[str], b: Sequence[str]) -> float:
        return self.many(a, [b])[0]

    def many(self, original: Sequence[str], others: Sequence[Sequence[str]]) -> list[float]:
        """Similarity of `original` against each of `others`, batched."""
        out: list[float | None] = [None] * len(others)
        remote: list[int] = []
        for i, other in enumerate(others):
            if list(original) == list(other):
                out[i] = 1.0
            else:
                remote.append(i)
        if remote and self._endpoint is not None:
            try:
                values = self._endpoint.similarity([(original, others[i]) for i in remote])
                for i, value in zip(remote, values):
                    out[i] = value
                remote = []
            except AdapterError as exc:
                if self._store is None:
                    raise
                log.warning("similarity endpoint failed (%s); using lexical fallback", exc)
                self._endpoint = None
        for i in remote:
            out[i] = self._store.fallback_similarity(original, others[i])
        return out
