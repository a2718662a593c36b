"""Seeded simulation of the audio/visual corruption protocol.

Corruption is tracked as time intervals, not synthesized signals.

Randomness
----------
Every draw comes from a ``numpy.random.Generator`` over PCG64. A record's
generator is seeded with ``SeedSequence([seed, h])`` where ``h`` is the
first 8 bytes (little-endian) of ``blake2b(record_id)``; records therefore
get independent streams and generation order does not matter.

Beta variates are ``G1 / (G1 + G2)`` with both gammas drawn by the
Marsaglia-Tsang squeeze/rejection method (normal + uniform per trial,
``U**(1/a)`` boost for shapes below one). Draw order inside
:func:`sample_corruption` is fixed: kind, portion, offset, SNR.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateWindow, InvalidDuration, InvalidShape, ValidationError

AUDIO_KINDS = ("babble", "speech", "music", "natural")
VIDEO_KINDS = ("object", "hands", "pixelate", "blur")


class Stream(str, Enum):
    AUDIO = "audio"
    VIDEO = "video"

    @property
    def kinds(self) -> tuple[str, ...]:
        return AUDIO_KINDS if self is Stream.AUDIO else VIDEO_KINDS


class Mode(str, Enum):
    TRAIN_RANDOM = "TrainRandom"
    EVAL_AUDIO_FULL = "EvalAudioFull"
    EVAL_VIDEO_PORTION = "EvalVideoPortion"


@dataclass(frozen=True)
class CorruptionSpec:
    stream: Stream
    kind: str
    intervals: tuple[tuple[float, float], ...]
    snr_db: float | None = None

    def validate(self, duration_s: float | None = None) -> None:
        if self.kind not in self.stream.kinds:
            raise ValidationError(f"unknown {self.stream.value} corruption kind {self.kind!r}")
        if (self.snr_db is not None) != (self.stream is Stream.AUDIO):
            raise ValidationError("snr_db must be present for audio corruption and absent for video")
        prev_end = 0.0
        for start, end in self.intervals:
            if not (start < end):
                raise ValidationError(f"empty or reversed interval [{start}, {end})")
            if start < prev_end or start < 0:
                raise ValidationError("intervals must be sorted and non-overlapping")
            if duration_s is not None and end > duration_s + 1e-9:
                raise ValidationError(f"interval end {end} beyond duration {duration_s}")
            prev_end = end

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.snr_db is not None:
            out["snr_db"] = self.snr_db
        out["intervals"] = [[s, e] for s, e in self.intervals]
        return out

    @classmethod
    def from_json(cls, stream: Stream, obj: dict) -> CorruptionSpec:
        snr = obj.get("snr_db")
        return cls(
            stream=stream,
            kind=obj["kind"],
            intervals=tuple((float(s), float(e)) for s, e in obj.get("intervals", [])),
            snr_db=None if snr is None else float(snr),
        )


@dataclass(frozen=True)
class ProtocolConfig:
    mode: Mode = Mode.TRAIN_RANDOM
    snr_range_db: tuple[float, float] = (-10.0, 10.0)
    beta_alpha: float = 2.0
    beta_beta: float = 2.0
    # EvalVideoPortion only; None draws the portion from the Beta distribution
    fixed_portion: float | None = 0.5
    seed: int = 0
    kind: str | None = None
    intervals_per_record: int = 1

    def __post_init__(self) -> None:
        low, high = self.snr_range_db
        if low > high:
            raise ValidationError("snr_range_db low > high")
        if self.beta_alpha <= 0 or self.beta_beta <= 0:
            raise InvalidShape("Beta shape parameters must be > 0")
        if self.fixed_portion is not None and not 0.0 <= self.fixed_portion <= 1.0:
            raise ValidationError("fixed_portion must lie in [0, 1]")
        if self.intervals_per_record < 1:
            raise ValidationError("intervals_per_record must be >= 1")

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed)

    @classmethod
    def from_json(cls, obj: dict) -> ProtocolConfig:
        kw = dict(obj)
        if "mode" in kw:
            kw["mode"] = Mode(kw["mode"])
        if "snr_range_db" in kw:
            kw["snr_range_db"] = tuple(float(x) for x in kw["snr_range_db"])
        return cls(**kw)


def record_rng(seed: int, record_id: str) -> np.random.Generator:
    h = int.from_bytes(hashlib.blake2b(record_id.encode("utf-8"), digest_size=8).digest(), "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), h])))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed & (2**64 - 1))))


def gamma_sample(shape: float, rng: np.random.Generator) -> float:
    if shape <= 0:
        raise InvalidShape(f"gamma shape must be > 0, got {shape}")
    if shape < 1.0:
        return gamma_sample(shape + 1.0, rng) * rng.random() ** (1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = rng.standard_normal()
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = rng.random()
        if u < 1.0 - 0.0331 * x**4:
            return d * v
        if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return d * v


def beta_sample(alpha: float, beta: float, rng: np.random.Generator) -> float:
    if alpha <= 0 or beta <= 0:
        raise InvalidShape(f"Beta shape parameters must be > 0, got ({alpha}, {beta})")
    while True:
        g1 = gamma_sample(alpha, rng)
        g2 = gamma_sample(beta, rng)
        if g1 + g2 > 0:
            return g1 / (g1 + g2)


def _place(duration: float, portion: float, pieces: int, rng: np.random.Generator) -> tuple[tuple[float, float], ...]:
    """Put ``portion`` of the timeline into ``pieces`` equal intervals, one per equal sub-range."""
    if portion <= 0.0:
        return ()
    span = duration / pieces
    length = portion * span
    out = []
    for p in range(pieces):
        offset = rng.random() * (span - length)
        start = p * span + offset
        out.append((start, min(start + length, duration)))
    return tuple(out)


def sample_corruption(duration_s: float, stream: Stream | str, cfg: ProtocolConfig, rng: np.random.Generator) -> CorruptionSpec:
    if not duration_s > 0:
        raise InvalidDuration(f"duration must be > 0, got {duration_s}")
    stream = Stream(stream)
    if cfg.mode is Mode.EVAL_AUDIO_FULL and stream is not Stream.AUDIO:
        raise ValidationError("EvalAudioFull applies to the audio stream")
    if cfg.mode is Mode.EVAL_VIDEO_PORTION and stream is not Stream.VIDEO:
        raise ValidationError("EvalVideoPortion applies to the video stream")

    kinds = stream.kinds
    if cfg.kind is not None:
        if cfg.kind not in kinds:
            raise ValidationError(f"unknown {stream.value} corruption kind {cfg.kind!r}")
        kind = cfg.kind
    else:
        kind = kinds[int(rng.integers(len(kinds)))]

    if cfg.mode is Mode.EVAL_AUDIO_FULL:
        intervals: tuple[tuple[float, float], ...] = ((0.0, float(duration_s)),)
    else:
        if cfg.mode is Mode.EVAL_VIDEO_PORTION and cfg.fixed_portion is not None:
            portion = cfg.fixed_portion
        else:
            portion = beta_sample(cfg.beta_alpha, cfg.beta_beta, rng)
        intervals = _place(float(duration_s), portion, cfg.intervals_per_record, rng)

    snr = None
    if stream is Stream.AUDIO:
        low, high = cfg.snr_range_db
        snr = float(low + (high - low) * rng.random())
    return CorruptionSpec(stream=stream, kind=kind, intervals=intervals, snr_db=snr)


def corrupted_fraction(spec: CorruptionSpec | None, window: tuple[float, float]) -> float:
    start, end = window
    if not end > start:
        raise DegenerateWindow(f"window [{start}, {end}) has no extent")
    if spec is None:
        return 0.0
    overlap = 0.0
    for s, e in spec.intervals:
        lo, hi = max(s, start), min(e, end)
        if hi > lo:
            overlap += hi - lo
    return min(overlap / (end - start), 1.0)


@dataclass
class CorruptionPlan:
    """Protocols applied to every record of a dataset.

    TrainRandom protocols corrupt one stream per record, picked uniformly,
    unless ``both_streams`` is set.
    """

    protocols: list[ProtocolConfig] = field(default_factory=list)
    seed: int = 0
    both_streams: bool = False

    @classmethod
    def from_json(cls, obj: dict, seed: int | None = None) -> CorruptionPlan:
        protos = [ProtocolConfig.from_json(p) for p in obj.get("protocols", [])]
        return cls(
            protocols=protos,
            seed=int(obj.get("seed", 0) if seed is None else seed),
            both_streams=bool(obj.get("both_streams", False)),
        )

    def sample(self, record_id: str, duration_s: float) -> dict[Stream, CorruptionSpec]:
        rng = record_rng(self.seed, record_id)
        out: dict[Stream, CorruptionSpec] = {}
        for cfg in self.protocols:
            if cfg.mode is Mode.EVAL_AUDIO_FULL:
                streams = [Stream.AUDIO]
            elif cfg.mode is Mode.EVAL_VIDEO_PORTION:
                streams = [Stream.VIDEO]
            elif self.both_streams:
                streams = [Stream.AUDIO, Stream.VIDEO]
            else:
                streams = [(Stream.AUDIO, Stream.VIDEO)[int(rng.integers(2))]]
            for s in streams:
                out[s] = sample_corruption(duration_s, s, cfg, rng)
        return out
