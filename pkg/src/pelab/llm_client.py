"""Provider-agnostic chat-completion client with a persistent response cache.

Requests are canonicalized (field-sorted, whitespace-free JSON) and keyed by
SHA-256, so a warm cache makes corpus runs resumable and bit-reproducible.
Cache entries are content-addressed files written via temp-then-rename, which
tolerates concurrent writers. The wire contract is the common chat-completion
HTTP shape (messages array, temperature/top_p/max_tokens), so any compatible
endpoint works by pointing PE_BASE_URL at it.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .errors import PeError, ProviderError, RateLimitError, StartupError, TransportError
from .prompting import DecodingParams, PromptMessages

API_KEY_ENV = "PE_API_KEY"
BASE_URL_ENV = "PE_BASE_URL"
CACHE_DIR_ENV = "PE_CACHE_DIR"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    messages: PromptMessages
    params: DecodingParams = field(default_factory=DecodingParams)

    def __post_init__(self):
        if not self.model:
            raise ValueError("model must be nonempty")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    model: str
    cached: bool
    latency_ms: int


def canonical_request(provider: str, request: CompletionRequest) -> str:
    payload = {
        "provider": provider,
        "model": request.model,
        "messages": {
            "mode": request.messages.mode.value,
            "system": request.messages.system_text,
            "user": request.messages.user_text,
        },
        "params": request.params.to_record(),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_digest(provider: str, request: CompletionRequest) -> str:
    return hashlib.sha256(canonical_request(provider, request).encode("utf-8")).hexdigest()


class ResponseCache:
    """Content-addressed response store: <root>/<first2hex>/<digest>.json."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _path(self, digest: str) -> Path:
        return self.root / digest[:2] / f"{digest}.json"

    def get(self, digest: str) -> str | None:
        path = self._path(digest)
        try:
            with open(path, encoding="utf-8") as handle:
                entry = json.load(handle)
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError):
            return None
        return entry.get("text")

    def put(self, digest: str, canonical: str, text: str) -> None:
        path = self._path(digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"request": canonical, "text": text}
        tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
        tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)


class MockProvider:
    """Deterministic in-process provider for tests and dry runs.

    Responses come from a canned digest->text map, or from a default
    callable applied to the request. Every real call is appended to
    self.calls (and to log_path, one digest per line, when given) so tests
    can assert call counts and concurrency.
    """

    name = "mock"

    def __init__(
        self,
        canned: dict[str, str] | None = None,
        default: Callable[[CompletionRequest], str] | None = None,
        log_path: str | Path | None = None,
    ):
        self.canned = dict(canned or {})
        self.default = default
        self.log_path = Path(log_path) if log_path else None
        self.calls: list[str] = []
        self.max_inflight_seen = 0
        self._inflight = 0
        self._lock = threading.Lock()

    def complete_text(self, request: CompletionRequest) -> str:
        digest = request_digest(self.name, request)
        with self._lock:
            self._inflight += 1
            self.max_inflight_seen = max(self.max_inflight_seen, self._inflight)
            self.calls.append(digest)
            if self.log_path is not None:
                with open(self.log_path, "a", encoding="utf-8") as handle:
                    handle.write(digest + "\n")
        try:
            if digest in self.canned:
                return self.canned[digest]
            if self.default is not None:
                return self.default(request)
            raise ProviderError(f"mock provider has no response for digest {digest[:12]}")
        finally:
            with self._lock:
                self._inflight -= 1


def echo_response(request: CompletionRequest) -> str:
    """Default mock behavior: a well-formed answer derived from the request
    digest, so reruns are reproducible without canned data."""
    tag = request_digest("mock", request)[:12]
    mode = request.messages.mode
    if mode.value == "cot":
        return (
            "Proposed Improvements:\n"
            f"1. Reword the translation (variant {tag}).\n"
            "Improved Translation:\n"
            f"mock improved translation {tag}"
        )
    if mode.value == "direct":
        return f"mock improved translation {tag}"
    return f"mock zero-shot translation {tag}"


class OpenAIProvider:
    """Chat-completion HTTP provider; the base URL may point at any
    compatible endpoint."""

    name = "openai"

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        api_key_env: str = API_KEY_ENV,
        timeout: float = 60.0,
    ):
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env)
        self.timeout = timeout
        if not self.api_key:
            raise StartupError(
                f"no API credential: set {api_key_env} or pass api_key explicitly"
            )

    def complete_text(self, request: CompletionRequest) -> str:
        payload = {
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.messages.system_text},
                {"role": "user", "content": request.messages.user_text},
            ],
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "max_tokens": request.params.max_tokens,
        }
        if not payload["messages"][0]["content"]:
            payload["messages"] = payload["messages"][1:]
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"request failed: {exc}") from exc
        if response.status_code == 429:
            raise RateLimitError("provider rate limit (HTTP 429)")
        if 400 <= response.status_code < 500:
            raise ProviderError(f"provider rejected request: HTTP {response.status_code}")
        if response.status_code >= 500:
            raise TransportError(f"provider error: HTTP {response.status_code}")
        try:
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc


@dataclass(frozen=True)
class RetryPolicy:
    retries: int = 3
    backoff_base: float = 1.0
    backoff_factor: float = 2.0


class LlmClient:
    """complete() with caching and retries; batch_complete() for bounded
    parallelism. Safe for concurrent callers."""

    def __init__(
        self,
        provider,
        cache_dir: str | Path | None = None,
        retry: RetryPolicy = RetryPolicy(),
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.provider = provider
        root = cache_dir or os.environ.get(CACHE_DIR_ENV) or ".pe_cache"
        self.cache = ResponseCache(root)
        self.retry = retry
        self._sleep = sleep
        self._rng = rng or random.Random()

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        digest = request_digest(self.provider.name, request)
        cached = self.cache.get(digest)
        if cached is not None:
            return CompletionResponse(text=cached, model=request.model, cached=True, latency_ms=0)
        started = time.monotonic()
        text = self._call_with_retries(request)
        latency_ms = int((time.monotonic() - started) * 1000)
        self.cache.put(digest, canonical_request(self.provider.name, request), text)
        return CompletionResponse(text=text, model=request.model, cached=False, latency_ms=latency_ms)

    def _call_with_retries(self, request: CompletionRequest) -> str:
        attempt = 0
        while True:
            try:
                return self.provider.complete_text(request)
            except ProviderError:
                raise
            except TransportError as exc:
                attempt += 1
                if attempt > self.retry.retries:
                    raise TransportError(
                        f"giving up after {self.retry.retries} retries: {exc}"
                    ) from exc
                ceiling = self.retry.backoff_base * self.retry.backoff_factor ** (attempt - 1)
                self._sleep(self._rng.uniform(0, ceiling))

    def batch_complete(
        self, requests: Sequence[CompletionRequest], max_inflight: int
    ) -> list[CompletionResponse | PeError]:
        """Run requests with at most max_inflight concurrently; the output
        order matches the input order and per-item failures are embedded."""
        if max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        if not requests:
            return []
        results: list[CompletionResponse | PeError] = [None] * len(requests)  # type: ignore[list-item]
        with ThreadPoolExecutor(max_workers=max_inflight) as pool:
            futures = {
                pool.submit(self.complete, request): index
                for index, request in enumerate(requests)
            }
            for future in as_completed(futures):
                index = futures[future]
                try:
                    results[index] = future.result()
                except PeError as exc:
                    results[index] = exc
        return results
