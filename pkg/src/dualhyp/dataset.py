"""Line-delimited dual-hypothesis dataset: records, validation, I/O.

One JSON object per line::

    {"schema_version":1,"id":"...","ref":"...","duration_s":2.0,
     "asr":[{"text":"...","score":-1.2},...],"vsr":[...],
     "audio_corruption":{"kind":"babble","snr_db":0.0,"intervals":[[0.0,2.0]]},
     "video_corruption":{"kind":"object","intervals":[[0.5,1.5]]},
     "audio_mask":"[N][N][N][N][N]","video_mask":"[C][N][N][N][C]",
     "tags":{"noise":"babble"}}

Optional keys are omitted when absent. :func:`dumps_record` emits keys in
the order above, so load/dump round-trips byte-for-byte.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .align import Tokens, normalize
from .corruption import CorruptionSpec, Stream
from .errors import DuplicateId, EmptyList, IoFailure, ParseError, SchemaVersionUnsupported, ValidationError
from .nbest import DualHypotheses, Hypothesis, Modality, NBestList
from .relmask import ReliabilityMask, num_segments

SCHEMA_VERSION = 1
DEFAULT_NBEST = 5


@dataclass(frozen=True)
class DualRecord:
    id: str
    ref: str
    asr: NBestList
    vsr: NBestList
    duration_s: float
    audio_corruption: CorruptionSpec | None = None
    video_corruption: CorruptionSpec | None = None
    audio_mask: ReliabilityMask | None = None
    video_mask: ReliabilityMask | None = None
    tags: dict[str, str] = field(default_factory=dict)
    # per-stream frame rates of externally supplied feature files
    feature_rates: dict[str, float] | None = None

    @property
    def ref_tokens(self) -> Tokens:
        return normalize(self.ref)

    @property
    def dual(self) -> DualHypotheses:
        return DualHypotheses(self.asr, self.vsr)

    def corruption(self, stream: Stream) -> CorruptionSpec | None:
        return self.audio_corruption if stream is Stream.AUDIO else self.video_corruption

    def mask(self, stream: Stream) -> ReliabilityMask | None:
        return self.audio_mask if stream is Stream.AUDIO else self.video_mask

    def with_masks(self, audio: ReliabilityMask | None, video: ReliabilityMask | None) -> DualRecord:
        return replace(self, audio_mask=audio, video_mask=video)

    def snr_db(self) -> float | None:
        if self.audio_corruption is not None and self.audio_corruption.snr_db is not None:
            return self.audio_corruption.snr_db
        if "snr_db" in self.tags:
            try:
                return float(self.tags["snr_db"])
            except ValueError:
                return None
        return None

    def to_json(self) -> dict:
        obj: dict = {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "ref": self.ref,
            "duration_s": self.duration_s,
            "asr": [{"text": h.text, "score": h.score} for h in self.asr],
            "vsr": [{"text": h.text, "score": h.score} for h in self.vsr],
        }
        if self.audio_corruption is not None:
            obj["audio_corruption"] = self.audio_corruption.to_json()
        if self.video_corruption is not None:
            obj["video_corruption"] = self.video_corruption.to_json()
        if self.audio_mask is not None:
            obj["audio_mask"] = str(self.audio_mask)
        if self.video_mask is not None:
            obj["video_mask"] = str(self.video_mask)
        if self.tags:
            obj["tags"] = dict(self.tags)
        if self.feature_rates:
            obj["feature_rates"] = dict(self.feature_rates)
        return obj


def dumps_record(rec: DualRecord) -> str:
    return json.dumps(rec.to_json(), ensure_ascii=False, separators=(",", ":"))


def _require(obj: dict, key: str, line: int, types: tuple[type, ...], label: str | None = None):
    if key not in obj:
        raise ParseError(line, label or key, "missing")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, types):
        raise ParseError(line, label or key, f"expected {' or '.join(t.__name__ for t in types)}, got {type(val).__name__}")
    return val


def _parse_nbest(obj: dict, key: str, line: int, n_best: int | None) -> NBestList:
    items = _require(obj, key, line, (list,))
    if not items:
        raise ParseError(line, key, "needs at least one hypothesis")
    if n_best is not None and len(items) > n_best:
        raise ParseError(line, key, f"{len(items)} hypotheses exceeds N={n_best}")
    hyps = []
    for j, item in enumerate(items):
        path = f"{key}[{j}]"
        if not isinstance(item, dict):
            raise ParseError(line, path, "expected object with text and score")
        text = _require(item, "text", line, (str,), f"{path}.text")
        score = _require(item, "score", line, (int, float), f"{path}.score")
        if not math.isfinite(score):
            raise ParseError(line, f"{path}.score", "score must be finite")
        hyps.append(Hypothesis(text, float(score)))
    for j in range(1, len(hyps)):
        if hyps[j].score > hyps[j - 1].score:
            raise ParseError(line, f"{key}[{j}].score", "scores not descending")
    return NBestList(tuple(hyps), Modality(key))


def _parse_corruption(obj: dict, key: str, stream: Stream, line: int, duration: float) -> CorruptionSpec | None:
    raw = obj.get(key)
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ParseError(line, key, "expected object")
    try:
        for iv in raw.get("intervals", []):
            if not (isinstance(iv, list) and len(iv) == 2):
                raise ValidationError("intervals must be [start, end] pairs")
        spec = CorruptionSpec.from_json(stream, raw)
        spec.validate(duration)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(line, key, str(exc)) from None
    return spec


def _parse_mask(obj: dict, key: str, stream: Stream, line: int, duration: float) -> ReliabilityMask | None:
    raw = obj.get(key)
    if raw is None:
        return None
    if not isinstance(raw, str):
        raise ParseError(line, key, "expected mask string like [C][N]")
    try:
        mask = ReliabilityMask.parse(stream, raw)
    except ValueError as exc:
        raise ParseError(line, key, str(exc)) from None
    want = num_segments(duration)
    if len(mask) != want:
        raise ParseError(line, key, f"mask has {len(mask)} segments, duration implies {want}")
    return mask


def parse_record(obj: object, line: int = 0, n_best: int | None = DEFAULT_NBEST) -> DualRecord:
    if not isinstance(obj, dict):
        raise ParseError(line, "<record>", "expected a JSON object")
    version = obj.get("schema_version")
    if version is None:
        raise ParseError(line, "schema_version", "missing")
    if version != SCHEMA_VERSION or isinstance(version, bool):
        raise SchemaVersionUnsupported(line, version)
    rid = _require(obj, "id", line, (str,))
    if not rid:
        raise ParseError(line, "id", "must be non-empty")
    ref = _require(obj, "ref", line, (str,))
    duration = float(_require(obj, "duration_s", line, (int, float)))
    if not (math.isfinite(duration) and duration > 0):
        raise ParseError(line, "duration_s", "must be a positive number")
    asr = _parse_nbest(obj, "asr", line, n_best)
    vsr = _parse_nbest(obj, "vsr", line, n_best)
    tags = obj.get("tags", {})
    if not isinstance(tags, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in tags.items()):
        raise ParseError(line, "tags", "expected a string-to-string map")
    rates = obj.get("feature_rates")
    if rates is not None:
        if not isinstance(rates, dict) or not all(
            k in ("audio", "video") and isinstance(v, (int, float)) and v > 0 for k, v in rates.items()
        ):
            raise ParseError(line, "feature_rates", "expected {audio|video: positive Hz}")
        rates = {k: float(v) for k, v in rates.items()}
    return DualRecord(
        id=rid,
        ref=ref,
        asr=asr,
        vsr=vsr,
        duration_s=duration,
        audio_corruption=_parse_corruption(obj, "audio_corruption", Stream.AUDIO, line, duration),
        video_corruption=_parse_corruption(obj, "video_corruption", Stream.VIDEO, line, duration),
        audio_mask=_parse_mask(obj, "audio_mask", Stream.AUDIO, line, duration),
        video_mask=_parse_mask(obj, "video_mask", Stream.VIDEO, line, duration),
        tags=dict(tags),
        feature_rates=rates,
    )


def iter_dataset(path: str | Path, n_best: int | None = DEFAULT_NBEST) -> Iterator[DualRecord]:
    """Stream records; blank lines are skipped, line numbers are 1-based."""
    seen: set[str] = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, "<json>", exc.msg) from None
            rec = parse_record(obj, lineno, n_best)
            if rec.id in seen:
                raise DuplicateId(lineno, rec.id)
            seen.add(rec.id)
            yield rec


def load_dataset(path: str | Path, n_best: int | None = DEFAULT_NBEST) -> list[DualRecord]:
    return list(iter_dataset(path, n_best))


def write_dataset(path: str | Path, records: Iterable[DualRecord]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in records:
                fh.write(dumps_record(rec))
                fh.write("\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def pad_nbest(nbest: NBestList, n: int, rng: np.random.Generator) -> NBestList:
    """Pad to ``n`` entries by sampling existing entries uniformly with replacement.

    The padded list is stably re-sorted by score so it stays a valid
    descending N-best list; each copy lands right after its original.
    """
    if not len(nbest):
        raise EmptyList()
    entries = list(nbest.entries)
    base = len(entries)
    while len(entries) < n:
        entries.append(nbest.entries[int(rng.integers(base))])
    order = sorted(range(len(entries)), key=lambda j: -entries[j].score)
    return NBestList(tuple(entries[j] for j in order), nbest.modality)
