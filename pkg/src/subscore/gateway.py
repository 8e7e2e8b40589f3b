"""Provider-agnostic chat-completion access with retries and rate limiting.

Two providers ship: an HTTP provider speaking the hosted chat-completion wire
protocol, and a scripted provider that makes the whole downstream pipeline
deterministic for tests. Decoding parameters are configuration with
conservative defaults; none claims fidelity to any particular deployment.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol

API_KEY_ENV = "GLM_API_KEY"

DEFAULT_TEMPERATURE = 1.0
DEFAULT_MAX_OUTPUT_TOKENS = 1024
DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_BASE = 1.0
DEFAULT_BACKOFF_CAP = 30.0
DEFAULT_MAX_IN_FLIGHT = 4


class GatewayError(Exception):
    """Base for terminal gateway failures, each subclass distinguishable."""


class AuthenticationError(GatewayError):
    pass


class RateLimitExhausted(GatewayError):
    pass


class CompletionTimeout(GatewayError):
    pass


class ProviderUnavailable(GatewayError):
    pass


# Transient signals raised by providers; the gateway retries these.
class TransientFailure(Exception):
    terminal = ProviderUnavailable


class RateLimited(TransientFailure):
    terminal = RateLimitExhausted


class ProviderTimeout(TransientFailure):
    terminal = CompletionTimeout


class AuthFailure(Exception):
    """Never retried."""


@dataclass(frozen=True)
class ChatRequest:
    system_text: str
    user_text: str
    temperature: float = DEFAULT_TEMPERATURE
    seed: int | None = None
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    # Not part of the wire payload; carries routing keys such as
    # (response_id, subtrait_id, run_index) for scripted providers and audit.
    metadata: Mapping[str, object] | None = None

    def __post_init__(self):
        if not self.system_text or not self.user_text:
            raise ValueError("system_text and user_text must be non-empty")
        if not (self.temperature >= 0.0 and self.temperature == self.temperature and self.temperature != float("inf")):
            raise ValueError("temperature must be finite and >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatResult:
    text: str
    latency: float
    attempt_count: int


class Provider(Protocol):
    def send(self, request: ChatRequest) -> str: ...


class Gateway:
    """Wraps a provider with retry, backoff, in-flight bounding, and audit.

    Backoff is ``base * 2**k`` capped at ``backoff_cap``; total attempts never
    exceed ``retries + 1``. Authentication failures are surfaced immediately
    with zero retries. ``complete`` is safe to call from many threads; the
    semaphore bounds concurrent in-flight requests.
    """

    def __init__(
        self,
        provider: Provider,
        retries: int = DEFAULT_RETRIES,
        backoff_base: float = DEFAULT_BACKOFF_BASE,
        backoff_cap: float = DEFAULT_BACKOFF_CAP,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        min_interval: float = 0.0,
        sleep: Callable[[float], None] = time.sleep,
        audit_path: str | None = None,
    ):
        self.provider = provider
        self.retries = retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self._semaphore = threading.Semaphore(max_in_flight)
        self._sleep = sleep
        self._min_interval = min_interval
        self._throttle_lock = threading.Lock()
        self._last_start = 0.0
        self._audit_path = audit_path
        self._audit_lock = threading.Lock()

    def backoff_delay(self, attempt_index: int) -> float:
        return min(self.backoff_base * (2 ** attempt_index), self.backoff_cap)

    def _throttle(self) -> None:
        if self._min_interval <= 0:
            return
        with self._throttle_lock:
            now = time.monotonic()
            wait = self._last_start + self._min_interval - now
            if wait > 0:
                self._sleep(wait)
            self._last_start = max(now, self._last_start + self._min_interval)

    def _audit(self, entry: dict) -> None:
        if not self._audit_path:
            return
        with self._audit_lock:
            with open(self._audit_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def complete(self, request: ChatRequest) -> ChatResult:
        started = time.monotonic()
        attempts = 0
        while True:
            attempts += 1
            self._throttle()
            try:
                with self._semaphore:
                    text = self.provider.send(request)
            except AuthFailure as exc:
                self._audit({"event": "auth_failure", "attempts": attempts, "error": str(exc)})
                raise AuthenticationError(str(exc)) from exc
            except TransientFailure as exc:
                if attempts > self.retries:
                    self._audit({"event": "exhausted", "attempts": attempts, "error": str(exc)})
                    raise exc.terminal(f"gave up after {attempts} attempts: {exc}") from exc
                self._sleep(self.backoff_delay(attempts - 1))
                continue
            latency = time.monotonic() - started
            self._audit(
                {
                    "event": "completion",
                    "attempts": attempts,
                    "latency": latency,
                    "metadata": dict(request.metadata or {}),
                    "text": text,
                }
            )
            return ChatResult(text=text, latency=latency, attempt_count=attempts)


class ScriptedProvider:
    """Deterministic provider for tests.

    ``script`` entries are either raw response strings or exceptions to raise.
    With ``keyed=True`` entries come from a map keyed by
    (response_id, subtrait_id, run_index) read off request metadata;
    otherwise entries are consumed sequentially.
    """

    def __init__(
        self,
        script: list | None = None,
        keyed: Mapping[tuple, object] | None = None,
    ):
        self._script = list(script or [])
        self._keyed = dict(keyed or {})
        self._cursor = 0
        self._lock = threading.Lock()
        self.calls: list[ChatRequest] = []

    def send(self, request: ChatRequest) -> str:
        with self._lock:
            self.calls.append(request)
            if self._keyed:
                meta = request.metadata or {}
                key = (meta.get("response_id"), meta.get("subtrait_id"), meta.get("run_index"))
                if key not in self._keyed:
                    raise KeyError(f"no scripted response for {key}")
                entry = self._keyed[key]
            else:
                if self._cursor >= len(self._script):
                    raise AssertionError("scripted provider ran out of responses")
                entry = self._script[self._cursor]
                self._cursor += 1
        if isinstance(entry, Exception):
            raise entry
        return str(entry)


class SeededMockProvider:
    """Self-contained deterministic scorer used by ``--provider mock``.

    Scores and evidence are a pure function of (seed, response_id,
    subtrait_id, run_index); evidence strings are verbatim substrings of the
    response so grounding succeeds at the exact-match tier.
    """

    def __init__(self, response_texts: Mapping[str, str], seed: int = 0, scale_min: int = 0, scale_max: int = 3):
        self._texts = dict(response_texts)
        self._seed = seed
        self._min = scale_min
        self._max = scale_max

    def _digest(self, *parts: object) -> bytes:
        payload = "|".join(str(p) for p in parts)
        return hashlib.sha256(payload.encode("utf-8")).digest()

    def send(self, request: ChatRequest) -> str:
        meta = request.metadata or {}
        rid = str(meta.get("response_id"))
        sid = str(meta.get("subtrait_id"))
        k = meta.get("run_index", 0)
        digest = self._digest(self._seed, rid, sid, k)
        span = self._max - self._min + 1
        score = self._min + digest[0] % span
        text = self._texts.get(rid, "")
        sentences = [s for s in _split_sentences(text) if s.strip()]
        evidence: list[str] = []
        if score > self._min and sentences:
            want = 1 + digest[1] % 2
            for i in range(want):
                pick = digest[2 + i] % len(sentences)
                candidate = sentences[pick]
                if candidate not in evidence:
                    evidence.append(candidate)
        payload = json.dumps({"score": score, "evidence": evidence}, ensure_ascii=False)
        if digest[5] % 5 == 0:
            return f"```json\n{payload}\n```"
        return payload


def _split_sentences(text: str) -> list[str]:
    out: list[str] = []
    current: list[str] = []
    for ch in text:
        current.append(ch)
        if ch in ".!?":
            out.append("".join(current).strip())
            current = []
    tail = "".join(current).strip()
    if tail:
        out.append(tail)
    return out


@dataclass
class HttpProviderConfig:
    base_url: str
    model: str
    api_key: str | None = None
    timeout: float = 60.0
    extra_headers: dict = field(default_factory=dict)


class HttpChatProvider:
    """Speaks the standard hosted chat-completion wire protocol.

    Credential comes from the ``GLM_API_KEY`` environment variable unless set
    in the config. A missing credential or a 401/403 is an authentication
    failure and is never retried.
    """

    def __init__(self, config: HttpProviderConfig, client=None):
        import httpx

        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout)

    def send(self, request: ChatRequest) -> str:
        import httpx

        api_key = self.config.api_key or os.environ.get(API_KEY_ENV)
        if not api_key:
            raise AuthFailure(f"no credential: set {API_KEY_ENV} or configure api_key")
        payload = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        headers = {"Authorization": f"Bearer {api_key}", **self.config.extra_headers}
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        try:
            response = self._client.post(url, json=payload, headers=headers)
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise TransientFailure(str(exc)) from exc
        if response.status_code in (401, 403):
            raise AuthFailure(f"provider rejected credential (HTTP {response.status_code})")
        if response.status_code == 429:
            raise RateLimited("provider rate limit (HTTP 429)")
        if response.status_code >= 500:
            raise TransientFailure(f"provider error (HTTP {response.status_code})")
        if response.status_code != 200:
            raise TransientFailure(f"unexpected HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransientFailure(f"malformed provider response: {exc}") from exc
