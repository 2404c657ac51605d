"""Chat-completion gateway over remote endpoints plus a scripted mock backend.

One synchronous surface for every model role in the pipeline: retries with
exponential backoff, a shared per-backend rate limiter, bounded fan-out for
batches, and an optional on-disk response cache keyed by request content.
The gateway never decodes media; clip attachments travel as file references
with a declared sampling note.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import requests
import yaml

from .errors import BackendError, ClipLineError, InvalidArgumentError, TransportError

log = logging.getLogger(__name__)

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})
DEFAULT_SAMPLING_NOTE = "1 fps + audio"


@dataclass(frozen=True)
class MediaAttachment:
    """Reference to a media file plus how the backend should sample it."""

    ref: str
    sampling: str = DEFAULT_SAMPLING_NOTE


@dataclass(frozen=True)
class ChatRequest:
    model_tag: str
    user: str
    system: str | None = None
    media: tuple[MediaAttachment, ...] = ()
    max_output_tokens: int = 4096
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.user:
            raise InvalidArgumentError("chat request user text must be non-empty")
        if self.temperature < 0:
            raise InvalidArgumentError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class Usage:
    input_tokens: int
    output_tokens: int


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: Usage
    backend_id: str
    cached: bool = False


@dataclass(frozen=True)
class ChatFailure:
    """Per-position failure inside a batch; batches never abort as a whole."""

    error: str
    kind: str = "backend"


@dataclass(frozen=True)
class BackendConfig:
    """Connection and throttling settings for one model role.

    ``base_url`` may use the ``mock://<script-file>`` scheme to route all
    requests through a deterministic scripted backend. ``extra_payload``
    is merged into every HTTP request body and is where features such as
    model thinking stay disabled for endpoints that support toggling them.
    """

    base_url: str
    model_name: str
    api_key_env_var: str | None = None
    max_in_flight: int = 4
    requests_per_minute: int = 0
    max_retries: int = 3
    request_path: str = "/chat/completions"
    timeout_s: float = 60.0
    retry_base_s: float = 0.5
    extra_payload: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise InvalidArgumentError("max_in_flight must be >= 1")


def request_fingerprint(model_name: str, req: ChatRequest) -> str:
    """Content hash covering everything that affects a model's reply."""
    payload = {
        "model": model_name,
        "system": req.system,
        "user": req.user,
        "media": [[m.ref, m.sampling] for m in req.media],
        "temperature": req.temperature,
        "max_output_tokens": req.max_output_tokens,
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """On-disk response store; safe for concurrent readers and writers."""

    def __init__(self, cache_dir: str | Path):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def get(self, key: str) -> tuple[str, Usage] | None:
        path = self.dir / f"{key}.json"
        if not path.exists():
            return None
        with self._lock:
            obj = json.loads(path.read_text(encoding="utf-8"))
        return obj["text"], Usage(**obj["usage"])

    def put(self, key: str, text: str, usage: Usage) -> None:
        path = self.dir / f"{key}.json"
        blob = json.dumps(
            {"text": text, "usage": {"input_tokens": usage.input_tokens, "output_tokens": usage.output_tokens}},
            ensure_ascii=False,
            sort_keys=True,
        )
        with self._lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(blob, encoding="utf-8")
            os.replace(tmp, path)


class RateLimiter:
    """Sliding-window limiter shared by all calls through one gateway."""

    def __init__(self, requests_per_minute: int, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rpm = requests_per_minute
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.rpm <= 0:
            return
        while True:
            with self._lock:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.rpm:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self._sleep(max(wait, 0.01))


Transport = Callable[[ChatRequest], tuple[str, Usage]]


class HttpTransport:
    """OpenAI-style chat-completion call over HTTPS."""

    def __init__(self, backend: BackendConfig, session: requests.Session | None = None):
        self.backend = backend
        self.session = session or requests.Session()

    def __call__(self, req: ChatRequest) -> tuple[str, Usage]:
        b = self.backend
        messages: list[dict] = []
        if req.system:
            messages.append({"role": "system", "content": req.system})
        if req.media:
            content: object = [{"type": "text", "text": req.user}] + [
                {"type": "video_ref", "video_ref": {"path": m.ref, "sampling": m.sampling}}
                for m in req.media
            ]
        else:
            content = req.user
        messages.append({"role": "user", "content": content})
        payload = {
            "model": b.model_name,
            "messages": messages,
            "max_tokens": req.max_output_tokens,
            "temperature": req.temperature,
        }
        payload.update(b.extra_payload)
        headers = {"Content-Type": "application/json"}
        if b.api_key_env_var:
            key = os.environ.get(b.api_key_env_var, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
            else:
                log.warning("api key env var %s is not set", b.api_key_env_var)
        url = b.base_url.rstrip("/") + b.request_path
        try:
            resp = self.session.post(url, json=payload, headers=headers, timeout=b.timeout_s)
        except requests.RequestException as exc:
            raise TransportError(f"request to {url} failed: {exc}") from exc
        if resp.status_code < 200 or resp.status_code >= 300:
            raise BackendError(
                f"backend returned HTTP {resp.status_code}", status=resp.status_code, body=resp.text
            )
        try:
            obj = resp.json()
            text = obj["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(
                f"unexpected response shape: {exc}", status=resp.status_code, body=resp.text
            ) from exc
        usage = obj.get("usage") or {}
        return text, Usage(
            input_tokens=int(usage.get("prompt_tokens", 0)),
            output_tokens=int(usage.get("completion_tokens", 0)),
        )


class MockTransport:
    """Deterministic scripted backend.

    The script file (JSON or YAML) holds ordered rules; the first one that
    matches wins. A rule matches either by regex search over the user text
    plus media refs, or by the exact request fingerprint::

        rules:
          - pattern: "movie1_20000\\\\.mp4"
            reply: "A man runs."
          - hash: "3f1a..."
            reply: "..."
        default: "No scripted reply."
    """

    def __init__(self, script_path: str | Path, model_name: str = "mock",
                 on_request: Callable[[ChatRequest], None] | None = None):
        self.model_name = model_name
        self.on_request = on_request
        raw = Path(script_path).read_text(encoding="utf-8")
        if str(script_path).endswith((".yaml", ".yml")):
            script = yaml.safe_load(raw)
        else:
            script = json.loads(raw)
        self.rules = list(script.get("rules", []))
        self.default = script.get("default")

    def _match_target(self, req: ChatRequest) -> str:
        parts = [req.user]
        parts.extend(m.ref for m in req.media)
        return "\n".join(parts)

    def __call__(self, req: ChatRequest) -> tuple[str, Usage]:
        if self.on_request is not None:
            self.on_request(req)
        target = self._match_target(req)
        fingerprint = None
        for rule in self.rules:
            if "pattern" in rule and re.search(rule["pattern"], target):
                return self._reply(rule["reply"], req)
            if "hash" in rule:
                if fingerprint is None:
                    fingerprint = request_fingerprint(self.model_name, req)
                if rule["hash"] == fingerprint:
                    return self._reply(rule["reply"], req)
        if self.default is not None:
            return self._reply(self.default, req)
        raise BackendError(f"mock script has no reply for request tagged {req.model_tag!r}")

    def _reply(self, text: str, req: ChatRequest) -> tuple[str, Usage]:
        return text, Usage(input_tokens=len(req.user.split()), output_tokens=len(text.split()))


MOCK_SCHEME = "mock://"


def make_transport(backend: BackendConfig) -> Transport:
    if backend.base_url.startswith(MOCK_SCHEME):
        return MockTransport(backend.base_url[len(MOCK_SCHEME):], model_name=backend.model_name)
    return HttpTransport(backend)


class ModelGateway:
    """One backend endpoint with shared throttling, retries and caching."""

    def __init__(self, backend: BackendConfig, cache_dir: str | Path | None = None,
                 transport: Transport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.backend = backend
        self.transport = transport if transport is not None else make_transport(backend)
        self.cache = ResponseCache(cache_dir) if cache_dir else None
        self.limiter = RateLimiter(backend.requests_per_minute)
        self._sleep = sleep
        self._usage_lock = threading.Lock()
        self._usage = Usage(0, 0)

    def usage_snapshot(self) -> Usage:
        """Cumulative token usage of non-cached calls through this gateway."""
        with self._usage_lock:
            return self._usage

    def _add_usage(self, usage: Usage) -> None:
        with self._usage_lock:
            self._usage = Usage(
                self._usage.input_tokens + usage.input_tokens,
                self._usage.output_tokens + usage.output_tokens,
            )

    @property
    def backend_id(self) -> str:
        return self.backend.model_name

    def complete(self, req: ChatRequest) -> ChatResponse:
        """Run one chat completion, serving identical requests from cache.

        Transient failures (connection errors, HTTP 429/5xx) are retried
        with exponential backoff up to ``max_retries``; exhausting retries
        raises :class:`TransportError`, anything non-retryable surfaces as
        :class:`BackendError` immediately.
        """
        key = request_fingerprint(self.backend.model_name, req)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                text, usage = hit
                return ChatResponse(text=text, usage=usage, backend_id=self.backend_id, cached=True)
        attempts = 0
        while True:
            self.limiter.acquire()
            try:
                text, usage = self.transport(req)
                break
            except TransportError as exc:
                attempts += 1
                if attempts > self.backend.max_retries:
                    raise TransportError(
                        f"exhausted {self.backend.max_retries} retries: {exc}"
                    ) from exc
                self._backoff(attempts)
            except BackendError as exc:
                if exc.status not in RETRYABLE_STATUSES:
                    raise
                attempts += 1
                if attempts > self.backend.max_retries:
                    raise TransportError(
                        f"exhausted {self.backend.max_retries} retries (last HTTP {exc.status})"
                    ) from exc
                self._backoff(attempts)
        resp = ChatResponse(text=text, usage=usage, backend_id=self.backend_id, cached=False)
        self._add_usage(usage)
        if self.cache is not None:
            self.cache.put(key, text, usage)
        return resp

    def _backoff(self, attempt: int) -> None:
        self._sleep(self.backend.retry_base_s * (2 ** (attempt - 1)))

    def batch_complete(self, reqs: Sequence[ChatRequest]) -> list[ChatResponse | ChatFailure]:
        """Fan out requests with at most ``max_in_flight`` concurrent calls.

        The result list is positionally aligned with the input; a failed
        item becomes a :class:`ChatFailure` at its position instead of
        aborting the batch.
        """
        if not reqs:
            return []
        results: list[ChatResponse | ChatFailure] = [ChatFailure("not run")] * len(reqs)

        def run_one(idx: int) -> None:
            try:
                results[idx] = self.complete(reqs[idx])
            except TransportError as exc:
                results[idx] = ChatFailure(str(exc), kind="transport")
            except ClipLineError as exc:
                results[idx] = ChatFailure(str(exc), kind="backend")

        with ThreadPoolExecutor(max_workers=self.backend.max_in_flight) as pool:
            list(pool.map(run_one, range(len(reqs))))
        return results
