"""Corrector backends: a remote chat-completions endpoint and local stubs.

Stubs (``echo``, ``rover``, ``oracle``) are deterministic and need no
network; they exist so the evaluation pipeline can run end to end without
a model. The remote backend retries transport failures and 429/5xx
responses with capped exponential backoff and full jitter.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .align import Tokens, normalize
from .confusion import build_cn, vote, weights_from_scores
from .errors import AuthMissing, EmptyAnswer, MalformedResponse, TransportError, ValidationError

log = logging.getLogger(__name__)

RESPONSE_MARKER = "### Response:"
DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_TOKENS = 128


@dataclass(frozen=True)
class CorrectionRequest:
    record_id: str
    prompt: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    backend: str = "echo"
    # stubs read hypotheses (and, for ``oracle``, the reference) from here
    record: object | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValidationError("max_tokens must be >= 1")


@dataclass(frozen=True)
class CorrectionResult:
    record_id: str
    raw_output: str
    transcript: Tokens
    backend: str
    latency_ms: float = 0.0
    retries: int = 0

    @property
    def text(self) -> str:
        return " ".join(self.transcript)


def postprocess(raw_output: str) -> Tokens:
    """First line after the last echoed ``### Response:`` marker, normalized."""
    text = raw_output
    cut = text.rfind(RESPONSE_MARKER)
    if cut >= 0:
        text = text[cut + len(RESPONSE_MARKER):]
    text = text.lstrip()
    text = text.split("\n", 1)[0]
    toks = normalize(text)
    if not toks:
        raise EmptyAnswer("corrector produced no transcript")
    return toks


class Backend(Protocol):
    name: str

    def complete(self, request: CorrectionRequest) -> tuple[str, int]:
        """Return (raw model output, number of retries used)."""
        ...


class EchoBackend:
    """Returns the ASR 1-best unchanged."""

    name = "echo"

    def complete(self, request: CorrectionRequest) -> tuple[str, int]:
        return _record(request).asr.best.text, 0


class OracleBackend:
    """Returns the reference transcript. Test-only."""

    name = "oracle"

    def complete(self, request: CorrectionRequest) -> tuple[str, int]:
        rec = _record(request)
        if not getattr(rec, "ref", None):
            raise ValidationError(f"record {request.record_id}: oracle backend needs a reference")
        return rec.ref, 0


@dataclass
class RoverBackend:
    """Confusion-network vote over the ASR + VSR union.

    Each stream's hypotheses get softmax weights from their length-normalized
    scores, then the stream is scaled by its prior (``asr_prior`` for ASR,
    ``1 - asr_prior`` for VSR).
    """

    asr_prior: float = 0.5
    name: str = "rover"

    def weights(self, rec) -> tuple[list[Tokens], list[float]]:
        hyps: list[Tokens] = []
        weights: list[float] = []
        for nbest, prior in ((rec.asr, self.asr_prior), (rec.vsr, 1.0 - self.asr_prior)):
            toks = nbest.token_lists()
            w = weights_from_scores([h.score for h in nbest], [max(len(t), 1) for t in toks])
            hyps.extend(toks)
            weights.extend(prior * x for x in w)
        return hyps, weights

    def complete(self, request: CorrectionRequest) -> tuple[str, int]:
        hyps, weights = self.weights(_record(request))
        return " ".join(vote(build_cn(hyps, weights))), 0


def _record(request: CorrectionRequest):
    if request.record is None:
        raise ValidationError(f"record {request.record_id}: stub backends need the dataset record")
    return request.record


@dataclass(frozen=True)
class RemoteConfig:
    base_url: str
    model: str
    api_key_env: str = "OPENAI_API_KEY"
    timeout_s: float = 30.0
    max_attempts: int = 3
    base_delay_s: float = 0.5
    backoff_factor: float = 2.0
    max_in_flight: int = 4

    @classmethod
    def from_file(cls, path: str | Path) -> RemoteConfig:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if "api_key" in obj:
            raise ValidationError("config must name the key's environment variable (api_key_env), not hold the key")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown remote config keys: {sorted(unknown)}")
        return cls(**obj)


def _retryable_status(code: int) -> bool:
    return code == 429 or 500 <= code < 600


@dataclass
class ChatCompletionsBackend:
    config: RemoteConfig
    client: httpx.Client | None = None
    sleep: Callable[[float], None] = time.sleep
    rng: random.Random = field(default_factory=random.Random)
    name: str = "remote"

    def __post_init__(self) -> None:
        self._api_key = os.environ.get(self.config.api_key_env)
        if not self._api_key:
            raise AuthMissing(f"environment variable {self.config.api_key_env} is not set")
        if self.client is None:
            self.client = httpx.Client(timeout=self.config.timeout_s)
        self._lock = threading.Lock()
        self._slots = threading.BoundedSemaphore(self.config.max_in_flight)

    @property
    def url(self) -> str:
        return self.config.base_url.rstrip("/") + "/chat/completions"

    def payload(self, request: CorrectionRequest) -> dict:
        return {
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

    def _delay(self, attempt: int) -> float:
        cap = self.config.base_delay_s * self.config.backoff_factor**attempt
        with self._lock:
            return self.rng.uniform(0.0, cap)

    def complete(self, request: CorrectionRequest) -> tuple[str, int]:
        headers = {"Authorization": f"Bearer {self._api_key}"}
        last = ""
        for attempt in range(self.config.max_attempts):
            try:
                with self._slots:
                    resp = self.client.post(self.url, json=self.payload(request), headers=headers)
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code == 200:
                    return _parse_choice(resp), attempt
                if not _retryable_status(resp.status_code):
                    raise TransportError(f"HTTP {resp.status_code} from {self.url}: {resp.text[:200]}")
                last = f"HTTP {resp.status_code}"
            if attempt + 1 < self.config.max_attempts:
                delay = self._delay(attempt)
                log.warning("record %s: %s, retrying in %.2fs", request.record_id, last, delay)
                self.sleep(delay)
        raise TransportError(f"record {request.record_id}: giving up after {self.config.max_attempts} attempts ({last})")


def _parse_choice(resp: httpx.Response) -> str:
    try:
        body = resp.json()
        content = body["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"unexpected chat-completions body: {exc!r}") from None
    if not isinstance(content, str):
        raise MalformedResponse("message content is not a string")
    return content


STUBS: dict[str, Callable[[], Backend]] = {
    "echo": EchoBackend,
    "rover": RoverBackend,
    "oracle": OracleBackend,
}


def correct(backend: Backend, request: CorrectionRequest) -> CorrectionResult:
    t0 = time.perf_counter()
    raw, retries = backend.complete(request)
    latency = (time.perf_counter() - t0) * 1000.0
    return CorrectionResult(
        record_id=request.record_id,
        raw_output=raw,
        transcript=postprocess(raw),
        backend=backend.name,
        latency_ms=latency,
        retries=retries,
    )


@dataclass
class BatchOutcome:
    results: list[CorrectionResult]
    failures: dict[str, Exception]


def correct_many(backend: Backend, requests: Iterable[CorrectionRequest], jobs: int = 1) -> BatchOutcome:
    """Run requests with at most ``jobs`` in flight; results come back sorted by record id."""
    reqs: Sequence[CorrectionRequest] = list(requests)
    results: list[CorrectionResult] = []
    failures: dict[str, Exception] = {}

    def one(req: CorrectionRequest):
        try:
            return correct(backend, req)
        except Exception as exc:  # collected per record, reported by the caller
            return exc

    if jobs <= 1:
        outs = [one(r) for r in reqs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(one, reqs))
    for req, out in zip(reqs, outs):
        if isinstance(out, Exception):
            failures[req.record_id] = out
        else:
            results.append(out)
    results.sort(key=lambda r: r.record_id)
    return BatchOutcome(results, failures)


# results files ---------------------------------------------------------------


def result_to_json(result: CorrectionResult, system: str | None = None) -> dict:
    return {
        "id": result.record_id,
        "system": system or result.backend,
        "output": result.raw_output,
        "transcript": result.text,
        "latency_ms": round(result.latency_ms, 3),
        "retries": result.retries,
    }


def write_results(path: str | Path, results: Iterable[CorrectionResult], system: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in sorted(results, key=lambda r: r.record_id):
            fh.write(json.dumps(result_to_json(r, system), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def read_results(path: str | Path) -> tuple[str, dict[str, str]]:
    """Return (system name, record id -> transcript) from a results file."""
    system = None
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                name, rid, text = obj["system"], obj["id"], obj["transcript"]
            except (ValueError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad result line ({exc!r})") from None
            if system is None:
                system = name
            elif name != system:
                raise ValidationError(f"{path}:{lineno}: mixed systems {system!r} and {name!r}")
            if rid in out:
                raise ValidationError(f"{path}:{lineno}: duplicate id {rid!r}")
            out[rid] = text
    if system is None:
        raise ValidationError(f"{path}: no results")
    return system, out
