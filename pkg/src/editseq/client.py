"""HTTP client for OpenAI-compatible completion endpoints.

Speaks both /chat/completions and /completions. All sampling is pinned to
temperature 0 so reruns against the same endpoint are comparable. Transient
failures (connection errors, 429, 5xx) retry with capped exponential
backoff and jitter; auth failures abort immediately since no amount of
retrying fixes a bad key.
"""

from __future__ import annotations

import json
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import requests

from .formatter import (
    SENT_NEXT,
    SENTINELS,
    EditSequenceSample,
    build_oneshot_prompt,
    render_task_text,
)

CHAT = "chat"
COMPLETION = "completion"

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})

# end-of-text markers some completion servers emit instead of stopping
EOT_MARKERS = ("<|endoftext|>", "</s>", "<|eot_id|>")

EXTRACTOR_VERSION = "extract-v1"


class EndpointError(RuntimeError):
    """Request to the endpoint failed after any applicable retries."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class AuthFailure(EndpointError):
    """401/403 from the endpoint. Never retried."""


class EndpointUnreachable(EndpointError):
    """Connection-level failure that persisted through all retries."""


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key: str = ""
    mode: str = CHAT
    temperature: float = 0.0
    max_tokens: int = 512
    stop: tuple[str, ...] = ()
    timeout: float = 120.0
    max_retries: int = 3
    backoff_base: float = 0.5
    backoff_cap: float = 8.0
    requests_per_second: float | None = None
    concurrency: int = 4

    def __post_init__(self):
        if self.mode not in (CHAT, COMPLETION):
            raise ValueError(f"mode must be {CHAT!r} or {COMPLETION!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.requests_per_second is not None and self.requests_per_second <= 0:
            raise ValueError("requests_per_second must be positive")


class TokenBucket:
    """Classic token bucket; acquire() blocks until a token is available."""

    def __init__(self, rate: float, capacity: float | None = None):
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self._tokens = self.capacity
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self):
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(
                    self.capacity, self._tokens + (now - self._stamp) * self.rate
                )
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


@dataclass
class BatchResult:
    key: str
    text: str | None = None
    error: str | None = None
    attempts: int = 0
    latency_s: float = 0.0


@dataclass
class Prediction:
    """One model answer for one sample. extracted is set exactly when the
    request succeeded; a failed request carries error instead."""

    sample_id: str
    raw_output: str | None = None
    extracted: str | None = None
    latency_s: float = 0.0
    error: str | None = None

    def __post_init__(self):
        if (self.extracted is None) == (self.error is None):
            raise ValueError("need exactly one of extracted / error")

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "raw_output": self.raw_output,
            "extracted": self.extracted,
            "latency_s": round(self.latency_s, 4),
            "error": self.error,
        }


class Endpoint:
    def __init__(self, config: EndpointConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()
        self._local = threading.local()
        self._bucket = (
            TokenBucket(config.requests_per_second)
            if config.requests_per_second
            else None
        )
        self._rng = random.Random(0x5EED)
        self._rng_lock = threading.Lock()

    def _url(self) -> str:
        base = self.config.base_url.rstrip("/")
        path = "/chat/completions" if self.config.mode == CHAT else "/completions"
        return base + path

    def _payload(self, prompt: str, stop: list[str] | None) -> dict:
        body: dict = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        if self.config.mode == CHAT:
            body["messages"] = [{"role": "user", "content": prompt}]
        else:
            body["prompt"] = prompt
        stops = list(stop) if stop else list(self.config.stop)
        if stops:
            body["stop"] = stops[:4]  # common endpoint limit
        return body

    def _backoff(self, attempt: int):
        delay = min(self.config.backoff_cap, self.config.backoff_base * (2**attempt))
        with self._rng_lock:
            jitter = 0.5 + self._rng.random() / 2
        time.sleep(delay * jitter)

    def _complete_info(self, prompt: str, stop: list[str] | None = None) -> tuple[str, int, float]:
        """One logical request. Returns (text, http_attempts, latency_s)."""
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        payload = self._payload(prompt, stop)
        started = time.monotonic()
        last_exc: Exception | None = None
        attempts = self.config.max_retries + 1
        for attempt in range(attempts):
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                resp = self._session.post(
                    self._url(),
                    headers=headers,
                    json=payload,
                    timeout=self.config.timeout,
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                if attempt + 1 < attempts:
                    self._backoff(attempt)
                continue
            if resp.status_code in (401, 403):
                raise AuthFailure(
                    f"endpoint rejected credentials (HTTP {resp.status_code})",
                    status=resp.status_code,
                )
            if resp.status_code in RETRYABLE_STATUS:
                last_exc = EndpointError(
                    f"HTTP {resp.status_code} from endpoint", status=resp.status_code
                )
                if attempt + 1 < attempts:
                    self._backoff(attempt)
                continue
            if resp.status_code != 200:
                raise EndpointError(
                    f"HTTP {resp.status_code} from endpoint: {resp.text[:500]}",
                    status=resp.status_code,
                )
            return self._extract_text(resp), attempt + 1, time.monotonic() - started
        if isinstance(last_exc, EndpointError):
            raise last_exc
        raise EndpointUnreachable(
            f"endpoint unreachable after {attempts} attempts: {last_exc}"
        )

    def complete(self, prompt: str, stop: list[str] | None = None) -> str:
        """Single request with transport retries. Returns the generated text."""
        text, _, _ = self._complete_info(prompt, stop)
        return text

    def _extract_text(self, resp: requests.Response) -> str:
        try:
            data = resp.json()
            choice = data["choices"][0]
            if self.config.mode == CHAT:
                text = choice["message"]["content"]
            else:
                text = choice["text"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise EndpointError(f"malformed endpoint response: {exc}") from exc
        if not isinstance(text, str):
            raise EndpointError("endpoint returned non-string content")
        return text

    def run_batch(
        self,
        items: list[tuple[str, str]],
        stop: list[str] | None = None,
        validate=None,
    ) -> list[BatchResult]:
        """Run prompts concurrently, preserving input order in the results.

        `validate(text) -> bool` triggers a fresh request (up to max_retries
        extra) when a reply is well-formed HTTP but unusable content, e.g. a
        verdict that names no verdict. Per-item failures are recorded on
        their BatchResult; an AuthFailure anywhere aborts the whole batch,
        since every remaining request would fail the same way.
        """
        results = [BatchResult(key=key) for key, _ in items]
        abort = threading.Event()

        def worker(idx: int, prompt: str):
            res = results[idx]
            rounds = self.config.max_retries + 1 if validate is not None else 1
            try:
                for _ in range(rounds):
                    if abort.is_set():
                        raise AuthFailure("batch aborted")
                    text, attempts, latency = self._complete_info(prompt, stop=stop)
                    res.text = text
                    res.attempts += attempts
                    res.latency_s += latency
                    if validate is None or validate(text):
                        return
            except AuthFailure:
                abort.set()
                raise
            except EndpointError as exc:
                res.error = str(exc)
                res.text = None

        with ThreadPoolExecutor(max_workers=self.config.concurrency) as pool:
            futures = {
                pool.submit(worker, idx, prompt): idx
                for idx, (_, prompt) in enumerate(items)
            }
            auth_exc: AuthFailure | None = None
            for fut in as_completed(futures):
                try:
                    fut.result()
                except AuthFailure as exc:
                    if auth_exc is None:
                        auth_exc = exc
        if auth_exc is not None:
            raise auth_exc
        return results


def completion_stops() -> list[str]:
    """Stop sequences for raw completion mode: never run into another field."""
    return list(SENTINELS)


def _first_marker(text: str, markers) -> int:
    cut = len(text)
    for marker in markers:
        idx = text.find(marker)
        if idx >= 0:
            cut = min(cut, idx)
    return cut


_FENCE_OPEN = "```"


def _fenced_blocks(text: str) -> list[str]:
    """Bodies of complete ```-fenced blocks, language tags dropped."""
    blocks = []
    pos = 0
    while True:
        start = text.find(_FENCE_OPEN, pos)
        if start < 0:
            break
        body_start = text.find("\n", start)
        if body_start < 0:
            break
        end = text.find(_FENCE_OPEN, body_start + 1)
        if end < 0:
            break
        blocks.append(text[body_start + 1 : end])
        pos = end + len(_FENCE_OPEN)
    return blocks


def extract_next_contents(raw: str, mode: str = CHAT) -> str:
    """Pull the predicted file out of a model reply.

    Completion replies continue straight after the final sentinel, so they
    are cut at the first sentinel or end-of-text marker. Chat replies vary
    more: a single fenced code block wins, then anything after an echoed
    final sentinel, then the whole reply. Line endings normalize to LF.
    """
    text = raw.replace("\r\n", "\n")
    if mode == COMPLETION:
        return text[: _first_marker(text, SENTINELS + EOT_MARKERS)]
    blocks = _fenced_blocks(text)
    if len(blocks) == 1:
        return blocks[0]
    if SENT_NEXT in text:
        text = text.rsplit(SENT_NEXT, 1)[1]
        if text.startswith("\n"):
            text = text[1:]
    return text


def predict_sample_prompt(sample: EditSequenceSample, demo: EditSequenceSample, mode: str) -> str:
    """Prompt for one prediction request, shaped for the endpoint mode."""
    if mode == COMPLETION:
        demo_text = render_task_text(demo).text
        query = render_task_text(sample)
        return demo_text + "\n\n" + query.prompt_prefix
    return build_oneshot_prompt(sample, demo)


def predict_batch(
    endpoint: Endpoint,
    samples: list[EditSequenceSample],
    demo: EditSequenceSample,
) -> list[Prediction]:
    """One-shot next-version predictions, one Prediction per input sample."""
    mode = endpoint.config.mode
    items = [(s.sample_id, predict_sample_prompt(s, demo, mode)) for s in samples]
    stop = completion_stops() if mode == COMPLETION else None
    batch = endpoint.run_batch(items, stop=stop)
    out = []
    for res in batch:
        if res.error is not None:
            out.append(
                Prediction(sample_id=res.key, error=res.error, latency_s=res.latency_s)
            )
        else:
            out.append(
                Prediction(
                    sample_id=res.key,
                    raw_output=res.text,
                    extracted=extract_next_contents(res.text or "", mode),
                    latency_s=res.latency_s,
                )
            )
    assert len(out) == len(samples)
    return out


def load_predictions(path: str, mode: str = CHAT) -> dict[str, Prediction]:
    """Read predictions from JSONL keyed by sample_id.

    Accepts records written by Prediction.to_dict, minimal
    {"sample_id", "raw_output"} rows from external harnesses (extraction
    runs here), or pre-extracted {"sample_id", "extracted"} rows.
    """
    preds: dict[str, Prediction] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if "sample_id" not in row:
                raise ValueError(f"{path}:{line_no}: missing sample_id")
            error = row.get("error")
            extracted = row.get("extracted")
            if extracted is None:
                extracted = row.get("next_contents")  # external alias
            raw = row.get("raw_output", row.get("raw_text"))
            if extracted is None and error is None and raw is not None:
                extracted = extract_next_contents(raw, mode)
            if extracted is None and error is None:
                error = "prediction row has no usable output"
            if extracted is not None:
                error = None
            preds[row["sample_id"]] = Prediction(
                sample_id=row["sample_id"],
                raw_output=raw,
                extracted=extracted,
                latency_s=float(row.get("latency_s") or 0.0),
                error=error,
            )
    return preds
