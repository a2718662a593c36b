from __future__ import annotations

import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualhyp.corruption import CorruptionSpec, Stream
from dualhyp.errors import (
    DegenerateLabels,
    DimensionMismatch,
    FrameCountMismatch,
    InvalidDuration,
    LengthMismatch,
    NonFiniteFeature,
    ValidationError,
)
from dualhyp.relmask import (
    CLASSES,
    PredictorModel,
    Rel,
    ReliabilityMask,
    SegmentFeatures,
    eval_masks,
    f1_score,
    label_fraction,
    label_mask,
    loss_and_grad,
    mask_to_string,
    num_segments,
    pool_features,
    predict,
    read_features,
    segment_bounds,
    train_predictor,
    write_features,
)

C, N, M = Rel.CLEAN, Rel.NOISY, Rel.MIXED

CENTRES = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])


def separable(n_per_class=60, seed=0):
    rng = np.random.default_rng(seed)
    x = np.vstack([c + rng.normal(scale=0.5, size=(n_per_class, 2)) for c in CENTRES])
    y = [cls for cls in CLASSES for _ in range(n_per_class)]
    return x, y


def mask(text, stream=Stream.AUDIO):
    return ReliabilityMask.parse(stream, text)


# segments and labels ----------------------------------------------------------


def test_segment_bounds_examples():
    flat = [t for w in segment_bounds(2.0) for t in w]
    assert flat == pytest.approx([0.0, 0.4, 0.4, 0.8, 0.8, 1.2, 1.2, 1.6, 1.6, 2.0])
    assert segment_bounds(0.3) == [(0.0, 0.3)]
    b = segment_bounds(2.1)
    assert len(b) == 6 and list(b[-1]) == pytest.approx([2.0, 2.1])
    with pytest.raises(InvalidDuration):
        segment_bounds(0.0)


@pytest.mark.parametrize("f, label", [(0.0999, C), (0.10, M), (0.60, M), (0.6001, N), (0.0, C), (1.0, N)])
def test_label_thresholds(f, label):
    assert label_fraction(f) is label


def test_label_mask_worked_example():
    spec = CorruptionSpec(Stream.VIDEO, "object", ((0.5, 1.5),))
    m = label_mask(spec, 2.0)
    assert m.tokens == (C, N, N, N, C)
    assert str(m) == "[C][N][N][N][C]"


def test_label_mask_no_corruption_is_clean():
    assert label_mask(None, 1.0, Stream.AUDIO).tokens == (C, C, C)
    assert label_mask(CorruptionSpec(Stream.VIDEO, "blur", ()), 1.0).tokens == (C, C, C)
    with pytest.raises(ValidationError):
        label_mask(None, 1.0)
    with pytest.raises(ValidationError):
        label_mask(CorruptionSpec(Stream.VIDEO, "blur", ()), 1.0, Stream.AUDIO)


def test_label_mask_threshold_from_intervals():
    # 0.04 s of a 0.4 s window is exactly 10 percent -> Mixed
    spec = CorruptionSpec(Stream.VIDEO, "hands", ((0.36, 0.4),))
    assert label_mask(spec, 0.4).tokens == (M,)


@given(st.floats(0.01, 60.0))
def test_mask_length_is_ceil(duration):
    k = math.ceil(duration / 0.4 - 1e-9)
    assert len(label_mask(None, duration, Stream.AUDIO)) == k == num_segments(duration) == len(segment_bounds(duration))
    assert len(label_mask(None, duration, Stream.VIDEO)) == k


ORDER = {C: 0, M: 1, N: 2}


@given(st.floats(0.0, 3.0), st.floats(0.05, 2.0), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_labeling_is_monotone(start, length, grow_left, grow_right):
    duration = 5.0
    small = CorruptionSpec(Stream.VIDEO, "blur", ((start, min(start + length, duration)),))
    big = CorruptionSpec(Stream.VIDEO, "blur", ((max(0.0, start - grow_left), min(start + length + grow_right, duration)),))
    for a, b in zip(label_mask(small, duration).tokens, label_mask(big, duration).tokens):
        assert ORDER[b] >= ORDER[a]


def test_mask_rendering():
    assert mask_to_string(ReliabilityMask(Stream.AUDIO, (C, N, N, M, C))) == "[C][N][N][M][C]"
    assert mask_to_string(ReliabilityMask(Stream.AUDIO, ())) == ""
    assert mask_to_string(ReliabilityMask(Stream.AUDIO, (M,))) == "[M]"
    assert mask("[C][M]").tokens == (C, M)
    with pytest.raises(ValidationError):
        mask("[C] [M]")
    with pytest.raises(ValidationError):
        mask("[X]")


# feature files and pooling ------------------------------------------------------


def test_feature_file_layout(tmp_path):
    m = np.arange(6, dtype=np.float32).reshape(3, 2)
    path = tmp_path / "x.feat"
    write_features(path, m)
    raw = path.read_bytes()
    assert raw[:5] == b"FEAT\x01"
    assert struct.unpack("<II", raw[5:13]) == (3, 2)
    assert np.frombuffer(raw[13:], dtype="<f4").tolist() == [0, 1, 2, 3, 4, 5]
    assert np.array_equal(read_features(path), m)


@pytest.mark.parametrize(
    "blob, msg",
    [(b"FEA", "truncated"), (b"XXXX\x01" + b"\0" * 8, "magic"), (b"FEAT\x02" + b"\0" * 8, "version"),
     (b"FEAT\x01" + struct.pack("<II", 2, 2) + b"\0" * 4, "payload")],
)
def test_feature_file_rejects_bad_input(tmp_path, blob, msg):
    path = tmp_path / "bad.feat"
    path.write_bytes(blob)
    with pytest.raises(ValidationError, match=msg):
        read_features(path)


def test_pool_constant_rows():
    feats = SegmentFeatures(np.full((50, 3), 7.0), 25.0)
    pooled = pool_features(feats, 2.0)
    assert pooled.shape == (5, 3)
    assert np.all(pooled == 7.0)


def test_pool_window_arithmetic():
    feats = SegmentFeatures(np.arange(50, dtype=float)[:, None], 25.0)
    pooled = pool_features(feats, 2.0)
    assert pooled[:, 0].tolist() == [4.5, 14.5, 24.5, 34.5, 44.5]


def test_pool_frame_slack():
    pool_features(SegmentFeatures(np.ones((49, 2)), 25.0), 2.0)
    pool_features(SegmentFeatures(np.ones((51, 2)), 25.0), 2.0)
    with pytest.raises(FrameCountMismatch):
        pool_features(SegmentFeatures(np.ones((48, 2)), 25.0), 2.0)
    # 16 kHz audio: 6,400 samples per 0.4 s segment
    assert pool_features(SegmentFeatures(np.ones((32_000, 1)), 16_000.0), 2.0).shape == (5, 1)


def test_pool_rejects_empty_segment():
    # 0.41 s at 25 Hz -> 10 frames, but the ceil rule asks for a second segment
    with pytest.raises(FrameCountMismatch):
        pool_features(SegmentFeatures(np.ones((10, 1)), 25.0), 0.41)


# predictor --------------------------------------------------------------------------


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    eps = 1e-5
    worst = 0.0
    for point in range(50):
        dims, n = 4, 12
        x = rng.normal(size=(n, dims))
        y = rng.integers(0, 3, size=n)
        w = rng.normal(size=(dims, 3))
        b = rng.normal(size=3)
        l2 = 0.1 * (point % 3)
        _, gw, gb = loss_and_grad(w, b, x, y, l2)
        analytic = np.concatenate([gw.ravel(), gb])
        numeric = np.empty_like(analytic)
        params = np.concatenate([w.ravel(), b])
        for i in range(len(params)):
            hi, lo = params.copy(), params.copy()
            hi[i] += eps
            lo[i] -= eps
            f_hi = loss_and_grad(hi[:-3].reshape(dims, 3), hi[-3:], x, y, l2)[0]
            f_lo = loss_and_grad(lo[:-3].reshape(dims, 3), lo[-3:], x, y, l2)[0]
            numeric[i] = (f_hi - f_lo) / (2 * eps)
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
        worst = max(worst, float(rel.max()))
    assert worst < 1e-4


def test_zero_epochs_loss_is_ln3():
    x, y = separable()
    model = train_predictor(x, y, epochs=0)
    assert abs(model.final_loss - math.log(3)) < 1e-9


def test_separable_task_is_learned():
    x, y = separable()
    model = train_predictor(x, y, learning_rate=0.1, epochs=500)
    acc = np.mean([p is t for p, t in zip(predict(model, x).tokens, y)])
    assert acc >= 0.99
    xt, yt = separable(20, seed=1)
    assert list(predict(model, xt).tokens) == yt


def test_loss_non_increasing_at_small_lr():
    x, y = separable()
    hist = train_predictor(x, y, learning_rate=1e-3, epochs=200).loss_history
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_training_errors():
    x, y = separable()
    with pytest.raises(DegenerateLabels):
        train_predictor(x, [C] * len(y))
    bad = x.copy()
    bad[0, 0] = np.nan
    with pytest.raises(NonFiniteFeature):
        train_predictor(bad, y)
    with pytest.raises(LengthMismatch):
        train_predictor(x, y[:-1])


def test_zero_model_predicts_clean_and_dims_checked():
    model = PredictorModel(np.zeros((2, 3)), np.zeros(3))
    assert predict(model, np.ones((4, 2))).tokens == (C,) * 4
    assert len(predict(model, np.ones((1, 2)))) == 1
    with pytest.raises(DimensionMismatch):
        predict(model, np.ones((1, 5)))


def test_model_json_roundtrip():
    x, y = separable()
    model = train_predictor(x, y, epochs=20)
    back = PredictorModel.from_json(model.to_json())
    assert np.array_equal(back.weights, model.weights)
    assert predict(back, x) == predict(model, x)
    with pytest.raises(ValidationError):
        PredictorModel.from_json({**model.to_json(), "classes": ["N", "C", "M"]})


# metrics --------------------------------------------------------------------------


def test_f1_from_table_values():
    assert f1_score(0.953, 0.878) == pytest.approx(0.914, abs=5e-4)


def test_eval_identical_masks():
    m = [mask("[C][N][M]"), mask("[N][C]")]
    res = eval_masks(m, m)
    assert (res.accuracy, res.precision, res.recall, res.f1) == (1.0, 1.0, 1.0, 1.0)


def test_eval_all_clean_prediction():
    res = eval_masks([mask("[C][C][C]")], [mask("[C][N][M]")])
    assert res.recall == 0.0 and res.precision == 0.0
    assert not res.precision_defined and res.recall_defined
    assert res.accuracy == pytest.approx(1 / 3)


def test_eval_micro_average_and_collapse():
    pred = [mask("[N][M][C]"), mask("[M][C]")]
    gt = [mask("[M][C][C]"), mask("[N][N]")]
    res = eval_masks(pred, gt)
    # tp: seg0 rec0, seg0 rec1; fp: seg1 rec0; fn: seg1 rec1; tn: seg2 rec0
    assert (res.tp, res.fp, res.fn, res.tn) == (2, 1, 1, 1)
    assert res.f1 == pytest.approx(f1_score(res.precision, res.recall))
    with pytest.raises(LengthMismatch):
        eval_masks([mask("[C]")], [mask("[C][C]")])
