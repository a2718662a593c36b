from __future__ import annotations

import math

import pytest

from dualhyp.align import edit_distance, normalize
from dualhyp.corrector import EchoBackend, OracleBackend, RoverBackend
from dualhyp.corruption import CorruptionSpec, Stream
from dualhyp.dataset import DualRecord
from dualhyp.errors import MissingSnr, UnknownBaseline, ValidationError
from dualhyp.evaluate import GroupStats, run_eval, werr, werr_curve
from dualhyp.nbest import Modality, NBestList
from dualhyp.report import emit_report, fraction, render_csv, render_curve, wer_cell
from dualhyp.synth import synthetic_records

TEN = " ".join(f"w{i}" for i in range(10))


def rec(rid, ref, asr, vsr=None, noise="babble", snr=None):
    spec = None if snr is None else CorruptionSpec(Stream.AUDIO, noise, ((0.0, 1.0),), snr)
    return DualRecord(
        id=rid,
        ref=ref,
        asr=NBestList.from_texts(asr if isinstance(asr, list) else [asr]),
        vsr=NBestList.from_texts(vsr or [ref], Modality.VSR),
        duration_s=1.0,
        audio_corruption=spec,
        tags={"noise": noise},
    )


def with_errors(k):
    """A 10-word hypothesis with exactly k substitutions against TEN."""
    words = TEN.split()
    return " ".join(["zz"] * k + words[k:])


def test_two_group_overall_is_error_weighted():
    recs = [rec("a", TEN, with_errors(1), noise="babble"), rec("b", TEN, with_errors(3), noise="music")]
    rep = run_eval(recs, {})
    assert rep.wer("asr_1best", "babble") == pytest.approx(0.10)
    assert rep.wer("asr_1best", "music") == pytest.approx(0.30)
    assert rep.wer("asr_1best") == pytest.approx(0.20)


def test_oracle_backend_gives_zero_and_full_werr():
    recs = synthetic_records(60, seed=3)
    rep = run_eval(recs, {"oracle": OracleBackend()})
    for name, _ in rep.columns():
        assert rep.wer("oracle", name) == 0.0
        assert rep.werr("oracle", name) == 1.0


def test_echo_backend_matches_baseline_exactly():
    recs = synthetic_records(60, seed=3)
    rep = run_eval(recs, {"echo": EchoBackend()})
    for name, _ in rep.columns():
        assert rep.wer("echo", name) == rep.wer("asr_1best", name)
        assert rep.werr("echo", name) == 0.0


def test_werr_identity_and_overall_recount():
    recs = synthetic_records(150, seed=8)
    rep = run_eval(recs, {"rover": RoverBackend()})
    for system in rep.systems:
        for name, _ in rep.columns():
            base = rep.wer(rep.baseline, name)
            assert rep.wer(system, name) == pytest.approx(base * (1 - rep.werr(system, name)), abs=1e-9)
    errs = sum(edit_distance(r.ref_tokens, r.asr.best.tokens) for r in recs)
    words = sum(len(r.ref_tokens) for r in recs)
    assert rep.wer("asr_1best") == errs / words
    assert sum(g.n_records for g in rep.groups.values()) == rep.overall.n_records == len(recs)


def test_oracle_columns():
    recs = [rec("a", "a b", ["a x"], ["y b"])]
    rep = run_eval(recs, {}, group_by=None)
    assert rep.overall.oracle_wer("A") == (0.5, 0.5)
    assert rep.overall.oracle_wer("A+V") == (0.5, 0.0)
    assert rep.groups == {}


def test_skipped_records_are_counted():
    recs = [rec("a", TEN, TEN), rec("empty", "...", "x"), rec("c", TEN, with_errors(2))]
    rep = run_eval(recs, {"partial": {"a": TEN, "empty": "x"}})
    assert set(rep.skipped) == {"empty", "c"}
    assert rep.n_evaluated + len(rep.skipped) == rep.n_input == 3


def test_unknown_baseline():
    with pytest.raises(UnknownBaseline):
        run_eval([rec("a", TEN, TEN)], {}, baseline="nope")


def test_custom_baseline_and_utterance_mean():
    recs = [rec("a", "a b", "a x"), rec("b", TEN, TEN)]
    rep = run_eval(recs, {"sys": {"a": "a b", "b": with_errors(1)}}, group_by=None, baseline="sys",
                   utterance_mean=True)
    assert rep.wer("asr_1best") == pytest.approx(0.25)
    assert rep.wer("sys") == pytest.approx(0.05)


def test_werr_helper():
    assert werr(0.40, 0.16) == pytest.approx(0.60)
    assert werr(0.0, 0.0) == 0.0
    assert math.isnan(werr(0.0, 0.1))


def test_group_stats_merge():
    a, b = GroupStats(), GroupStats()
    a.add_record(4, {"s": 1}, {"A": (1, 0), "V": (1, 1), "A+V": (0, 0)})
    b.add_record(6, {"s": 0}, {"A": (0, 0), "V": (2, 2), "A+V": (0, 0)})
    a.merge(b)
    assert a.wer("s") == pytest.approx(0.1)
    assert a.oracle_wer("V") == (pytest.approx(0.3), pytest.approx(0.3))


# WERR curves ---------------------------------------------------------------


def test_werr_curve_buckets():
    recs = [
        rec("a", TEN, with_errors(4), snr=-10.0),
        rec("b", TEN, with_errors(4), snr=-9.0),
        rec("c", TEN, with_errors(2), snr=5.2),
    ]
    system = {"a": with_errors(2), "b": with_errors(1), "c": with_errors(2)}
    curve = werr_curve(recs, system, snr_buckets=[-10.0, -5.0, 0.0, 5.0, 10.0])
    assert [s for s, _ in curve] == [-10.0, 5.0]  # empty buckets are omitted
    assert curve[0][1] == pytest.approx((0.8 - 0.3) / 0.8)
    assert curve[1][1] == 0.0


def test_werr_curve_value_and_self():
    recs = [rec(f"r{i}", TEN, with_errors(4), snr=0.0) for i in range(5)]
    sys16 = {r.id: with_errors(2 if i < 4 else 0) for i, r in enumerate(recs)}
    assert werr_curve(recs, sys16)[0][1] == pytest.approx((0.40 - 0.16) / 0.40)
    same = {r.id: r.asr.best.text for r in recs}
    assert werr_curve(recs, same) == [(0.0, 0.0)]


def test_werr_curve_requires_snr():
    with pytest.raises(MissingSnr):
        werr_curve([rec("a", TEN, TEN)], {"a": TEN})


# rendering -----------------------------------------------------------------


def test_cells():
    w = werr(0.258, 0.132)
    assert wer_cell(0.132, w) == "13.2 (-48.8%)"
    assert wer_cell(0.132) == "13.2"
    assert wer_cell(0.3, werr(0.2, 0.3)) == "30.0 (+50.0%)"
    assert wer_cell(0.2, 0.0) == "20.0 (0.0%)"
    assert f"{fraction(0.132)},{fraction(-w)}" == "0.132,-0.488"
    assert fraction(0.0005) == "0.001"


def test_markdown_report():
    recs = [rec("a", TEN, with_errors(3), noise="babble"), rec("b", TEN, with_errors(1), noise="music")]
    rep = run_eval(recs, {"fix": {"a": with_errors(1), "b": with_errors(1)}})
    text = emit_report(rep, "md")
    lines = text.splitlines()
    assert "| System | babble | music | Overall |" in lines
    assert "| asr_1best (baseline) | 30.0 | 10.0 | 20.0 |" in lines
    assert "| fix | 10.0 (-66.7%) | 10.0 (0.0%) | 10.0 (-50.0%) |" in lines
    assert "Evaluated 2 of 2 records; 0 skipped." in lines


def test_csv_report(tmp_path):
    recs = [rec("a", TEN, with_errors(3), noise="babble")]
    rep = run_eval(recs, {"fix": {"a": with_errors(1)}})
    out = tmp_path / "r.csv"
    text = emit_report(rep, "csv", out)
    assert out.read_text() == text == render_csv(rep)
    rows = text.splitlines()
    assert rows[0] == "group,system,n_records,wer,rel_change"
    assert "babble,asr_1best,1,0.300," in rows
    assert "Overall,fix,1,0.100,-0.667" in rows


def test_report_errors(tmp_path):
    rep = run_eval([rec("a", TEN, TEN)], {})
    with pytest.raises(ValidationError):
        emit_report(rep, "html")
    with pytest.raises(OSError):
        emit_report(rep, "md", tmp_path / "missing-dir" / "x.md")


def test_render_curve():
    text = render_curve({"s": [(-5.0, 0.25), (0.0, 0.5)]}, "csv")
    assert text == "system,snr_db,werr\ns,-5.0,0.250\ns,0.0,0.500\n"
    assert "| s | -5 | 25.0 |" in render_curve({"s": [(-5.0, 0.25)]}, "md")


def test_synthetic_records_shape():
    recs = synthetic_records(200, seed=1)
    assert len({r.id for r in recs}) == 200
    vocab = {t for r in recs for t in r.ref_tokens}
    assert len(vocab) <= 20
    assert all(1 <= len(r.ref_tokens) <= 12 and len(r.asr) == 5 and len(r.vsr) == 5 for r in recs)
    assert synthetic_records(5, seed=1) == recs[:5]
    assert normalize(recs[0].ref) == recs[0].ref_tokens
