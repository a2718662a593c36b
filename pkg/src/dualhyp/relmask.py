"""Reliability masks: ground-truth labeling, a segment-level predictor, metrics.

Streams are cut into 0.4 s segments (6,400 samples at 16 kHz audio, 10
frames at 25 Hz video). A segment is Clean below 10 % corrupted time,
Noisy above 60 %, Mixed otherwise (both boundaries are Mixed).

The predictor is multinomial logistic regression over mean-pooled
per-frame features, trained by full-batch gradient descent.
"""

from __future__ import annotations

import math
import re
import struct
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .corruption import CorruptionSpec, Stream, corrupted_fraction
from .errors import (
    DegenerateLabels,
    DimensionMismatch,
    FrameCountMismatch,
    InvalidDuration,
    LengthMismatch,
    NonFiniteFeature,
    ValidationError,
)

CHUNK_S = 0.4
AUDIO_RATE_HZ = 16_000
VIDEO_RATE_HZ = 25
CLEAN_BELOW = 0.10
NOISY_ABOVE = 0.60


class Rel(str, Enum):
    CLEAN = "C"
    NOISY = "N"
    MIXED = "M"


CLASSES = (Rel.CLEAN, Rel.NOISY, Rel.MIXED)
_CLASS_INDEX = {c: i for i, c in enumerate(CLASSES)}
_MASK_RE = re.compile(r"\[([CNM])\]")


@dataclass(frozen=True)
class ReliabilityMask:
    stream: Stream
    tokens: tuple[Rel, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __str__(self) -> str:
        return mask_to_string(self)

    @classmethod
    def parse(cls, stream: Stream | str, text: str) -> ReliabilityMask:
        toks = _MASK_RE.findall(text)
        if "".join(f"[{t}]" for t in toks) != text:
            raise ValidationError(f"malformed mask string {text!r}")
        return cls(Stream(stream), tuple(Rel(t) for t in toks))


def mask_to_string(mask: ReliabilityMask) -> str:
    return "".join(f"[{t.value}]" for t in mask.tokens)


def num_segments(duration_s: float) -> int:
    if not duration_s > 0:
        raise InvalidDuration(f"duration must be > 0, got {duration_s}")
    # tolerate float noise such as 1.2000000000000002 / 0.4
    return max(1, math.ceil(duration_s / CHUNK_S - 1e-9))


def segment_bounds(duration_s: float) -> list[tuple[float, float]]:
    k = num_segments(duration_s)
    return [(i * CHUNK_S, min((i + 1) * CHUNK_S, duration_s)) for i in range(k)]


def label_fraction(fraction: float) -> Rel:
    # fractions come from interval arithmetic in seconds; drop sub-nanosecond noise
    f = round(fraction, 9)
    if f < CLEAN_BELOW:
        return Rel.CLEAN
    if f > NOISY_ABOVE:
        return Rel.NOISY
    return Rel.MIXED


def label_mask(spec: CorruptionSpec | None, duration_s: float, stream: Stream | str | None = None) -> ReliabilityMask:
    """Ground-truth mask of ``stream`` from its corruption intervals (None: all Clean)."""
    if stream is None:
        if spec is None:
            raise ValidationError("stream is required when spec is None")
        stream = spec.stream
    stream = Stream(stream)
    if spec is not None and spec.stream is not stream:
        raise ValidationError(f"spec is for {spec.stream.value}, requested {stream.value}")
    toks = tuple(label_fraction(corrupted_fraction(spec, w)) for w in segment_bounds(duration_s))
    return ReliabilityMask(stream, toks)


# feature files ---------------------------------------------------------------

FEAT_MAGIC = b"FEAT"
FEAT_VERSION = 1
_FEAT_HEADER = struct.Struct("<4sBII")


@dataclass
class SegmentFeatures:
    matrix: np.ndarray
    frame_rate_hz: float
    stream: Stream = Stream.AUDIO

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] < 1:
            raise ValidationError("feature matrix must be frames x dims with at least one frame")


def write_features(path: str | Path, matrix: np.ndarray) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValidationError("feature matrix must be 2-D")
    frames, dims = m.shape
    with open(path, "wb") as f:
        f.write(_FEAT_HEADER.pack(FEAT_MAGIC, FEAT_VERSION, frames, dims))
        f.write(m.tobytes(order="C"))


def read_features(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _FEAT_HEADER.size:
        raise ValidationError(f"{path}: truncated feature header")
    magic, version, frames, dims = _FEAT_HEADER.unpack_from(data)
    if magic != FEAT_MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}")
    if version != FEAT_VERSION:
        raise ValidationError(f"{path}: unsupported feature file version {version}")
    body = data[_FEAT_HEADER.size:]
    if len(body) != frames * dims * 4:
        raise ValidationError(f"{path}: expected {frames}x{dims} float32 payload, got {len(body)} bytes")
    return np.frombuffer(body, dtype="<f4").reshape(frames, dims).astype(np.float64)


def pool_features(features: SegmentFeatures, duration_s: float) -> np.ndarray:
    """Mean feature vector per 0.4 s segment, shape (K, dims).

    Frame count and declared duration may disagree by at most one frame
    period; frames past the last segment fold into it.
    """
    k = num_segments(duration_s)
    rate = features.frame_rate_hz
    frames = features.matrix.shape[0]
    if abs(frames - duration_s * rate) > 1.0 + 1e-9:
        raise FrameCountMismatch(
            f"{frames} frames at {rate} Hz does not match duration {duration_s} s (expected ~{duration_s * rate:g})"
        )
    per_seg = CHUNK_S * rate
    seg = np.minimum((np.arange(frames) / per_seg + 1e-9).astype(int), k - 1)
    counts = np.bincount(seg, minlength=k)
    if (counts == 0).any():
        raise FrameCountMismatch(f"segment(s) {np.flatnonzero(counts == 0).tolist()} have no frames")
    sums = np.zeros((k, features.matrix.shape[1]))
    np.add.at(sums, seg, features.matrix)
    return sums / counts[:, None]


# predictor -------------------------------------------------------------------


@dataclass
class PredictorModel:
    weights: np.ndarray  # (dims, 3), class order Clean, Noisy, Mixed
    bias: np.ndarray  # (3,)
    epochs: int = 0
    learning_rate: float = 0.0
    l2: float = 0.0
    final_loss: float = float("nan")
    loss_history: list[float] = field(default_factory=list)

    @property
    def dims(self) -> int:
        return self.weights.shape[0]

    def to_json(self) -> dict:
        return {
            "classes": [c.value for c in CLASSES],
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "final_loss": self.final_loss,
        }

    @classmethod
    def from_json(cls, obj: dict) -> PredictorModel:
        if obj.get("classes", ["C", "N", "M"]) != ["C", "N", "M"]:
            raise ValidationError("predictor class order must be C, N, M")
        w = np.asarray(obj["weights"], dtype=np.float64)
        b = np.asarray(obj["bias"], dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != 3 or b.shape != (3,):
            raise ValidationError("predictor weights must be dims x 3 and bias length 3")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise NonFiniteFeature("predictor parameters must be finite")
        return cls(w, b, int(obj.get("epochs", 0)), float(obj.get("learning_rate", 0.0)),
                   float(obj.get("l2", 0.0)), float(obj.get("final_loss", "nan")))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def loss_and_grad(
    weights: np.ndarray, bias: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float = 0.0
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` (bias unpenalized), with gradients."""
    n = x.shape[0]
    logp = _log_softmax(x @ weights + bias)
    loss = -logp[np.arange(n), y].mean() + 0.5 * l2 * float((weights**2).sum())
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    return float(loss), x.T @ delta + l2 * weights, delta.sum(axis=0)


def _label_indices(labels: Iterable[Rel | str]) -> np.ndarray:
    return np.array([_CLASS_INDEX[Rel(lab)] for lab in labels], dtype=int)


def train_predictor(
    pooled: np.ndarray,
    labels: Sequence[Rel | str],
    learning_rate: float = 0.1,
    epochs: int = 500,
    l2: float = 0.0,
) -> PredictorModel:
    x = np.asarray(pooled, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("pooled features must be 2-D (segments x dims)")
    y = _label_indices(labels)
    if len(y) != x.shape[0]:
        raise LengthMismatch(f"{x.shape[0]} segments but {len(y)} labels")
    if not np.isfinite(x).all():
        raise NonFiniteFeature("features contain NaN or infinity")
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("training labels contain a single class")

    w = np.zeros((x.shape[1], len(CLASSES)))
    b = np.zeros(len(CLASSES))
    history = []
    loss, gw, gb = loss_and_grad(w, b, x, y, l2)
    history.append(loss)
    for _ in range(epochs):
        w -= learning_rate * gw
        b -= learning_rate * gb
        loss, gw, gb = loss_and_grad(w, b, x, y, l2)
        history.append(loss)
    return PredictorModel(w, b, epochs, learning_rate, l2, loss, history)


def predict_classes(model: PredictorModel, pooled: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(pooled, dtype=np.float64))
    if x.shape[1] != model.dims:
        raise DimensionMismatch(f"model expects {model.dims} dims, got {x.shape[1]}")
    # argmax keeps the first maximum, so ties resolve in C, N, M order
    return np.argmax(x @ model.weights + model.bias, axis=1)


def predict(model: PredictorModel, pooled: np.ndarray, stream: Stream | str = Stream.AUDIO) -> ReliabilityMask:
    idx = predict_classes(model, pooled)
    return ReliabilityMask(Stream(stream), tuple(CLASSES[i] for i in idx))


# metrics ---------------------------------------------------------------------


def f1_score(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class MaskMetrics:
    """Binary metrics with Noisy and Mixed collapsed into the positive class."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    precision_defined: bool = True
    recall_defined: bool = True

    @property
    def segments(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int) -> MaskMetrics:
        total = tp + fp + tn + fn
        p_def, r_def = tp + fp > 0, tp + fn > 0
        p = tp / (tp + fp) if p_def else 0.0
        r = tp / (tp + fn) if r_def else 0.0
        return cls(
            accuracy=(tp + tn) / total if total else 0.0,
            precision=p,
            recall=r,
            f1=f1_score(p, r),
            tp=tp, fp=fp, tn=tn, fn=fn,
            precision_defined=p_def,
            recall_defined=r_def,
        )

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "precision_defined": self.precision_defined, "recall_defined": self.recall_defined,
        }


def _counts(pred: ReliabilityMask, gt: ReliabilityMask) -> tuple[int, int, int, int]:
    if len(pred) != len(gt):
        raise LengthMismatch(f"mask lengths differ: {len(pred)} vs {len(gt)}")
    tp = fp = tn = fn = 0
    for p, g in zip(pred.tokens, gt.tokens):
        pp, gg = p is not Rel.CLEAN, g is not Rel.CLEAN
        if pp and gg:
            tp += 1
        elif pp:
            fp += 1
        elif gg:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


def eval_masks(pred: Sequence[ReliabilityMask], gt: Sequence[ReliabilityMask]) -> MaskMetrics:
    """Micro-averaged segment metrics over paired masks."""
    if len(pred) != len(gt):
        raise LengthMismatch(f"{len(pred)} predicted masks vs {len(gt)} reference masks")
    tp = fp = tn = fn = 0
    for p, g in zip(pred, gt):
        a, b, c, d = _counts(p, g)
        tp, fp, tn, fn = tp + a, fp + b, tn + c, fn + d
    return MaskMetrics.from_counts(tp, fp, tn, fn)
