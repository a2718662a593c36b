"""Corpus evaluation: per-group WER for each system, oracle columns, WERR."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .align import edit_distance, normalize
from .corrector import Backend, CorrectionRequest, correct
from .errors import EmptyReference, MissingSnr, UnknownBaseline
from .oracle import STREAMS, oracle_dual

ASR_1BEST = "asr_1best"
VSR_1BEST = "vsr_1best"
BUILTIN_SYSTEMS = (ASR_1BEST, VSR_1BEST)
OVERALL = "Overall"
UNTAGGED = "untagged"


@dataclass
class GroupStats:
    """Additive error tallies for one group of records."""

    n_records: int = 0
    ref_words: int = 0
    errors: dict[str, int] = field(default_factory=dict)
    utt_wer_sum: dict[str, float] = field(default_factory=dict)
    # stream -> [n-best oracle errors, compositional oracle errors]
    oracle: dict[str, list[int]] = field(default_factory=lambda: {s: [0, 0] for s in STREAMS})

    def add_record(self, ref_len: int, errs: Mapping[str, int], oracle_errs: Mapping[str, tuple[int, int]]) -> None:
        self.n_records += 1
        self.ref_words += ref_len
        for name, e in errs.items():
            self.errors[name] = self.errors.get(name, 0) + e
            self.utt_wer_sum[name] = self.utt_wer_sum.get(name, 0.0) + e / ref_len
        for s, (onb, ocp) in oracle_errs.items():
            self.oracle[s][0] += onb
            self.oracle[s][1] += ocp

    def merge(self, other: GroupStats) -> None:
        self.n_records += other.n_records
        self.ref_words += other.ref_words
        for name, e in other.errors.items():
            self.errors[name] = self.errors.get(name, 0) + e
        for name, v in other.utt_wer_sum.items():
            self.utt_wer_sum[name] = self.utt_wer_sum.get(name, 0.0) + v
        for s, (onb, ocp) in other.oracle.items():
            self.oracle[s][0] += onb
            self.oracle[s][1] += ocp

    def wer(self, system: str, utterance_mean: bool = False) -> float:
        if not self.n_records:
            return math.nan
        if utterance_mean:
            return self.utt_wer_sum[system] / self.n_records
        return self.errors[system] / self.ref_words

    def oracle_wer(self, stream: str) -> tuple[float, float]:
        if not self.ref_words:
            return (math.nan, math.nan)
        onb, ocp = self.oracle[stream]
        return onb / self.ref_words, ocp / self.ref_words


def werr(baseline_wer: float, system_wer: float) -> float:
    """Relative WER reduction ``(baseline - system) / baseline``; NaN when undefined."""
    if baseline_wer == 0:
        return 0.0 if system_wer == 0 else math.nan
    return (baseline_wer - system_wer) / baseline_wer


@dataclass
class EvalReport:
    systems: list[str]
    baseline: str
    group_by: str | None
    groups: dict[str, GroupStats]
    overall: GroupStats
    skipped: dict[str, str]
    n_input: int
    utterance_mean: bool = False

    @property
    def n_evaluated(self) -> int:
        return self.overall.n_records

    def group_names(self) -> list[str]:
        return sorted(self.groups)

    def columns(self) -> list[tuple[str, GroupStats]]:
        cols = [(g, self.groups[g]) for g in self.group_names()]
        return cols + [(OVERALL, self.overall)]

    def wer(self, system: str, group: str = OVERALL) -> float:
        stats = self.overall if group == OVERALL else self.groups[group]
        return stats.wer(system, self.utterance_mean)

    def werr(self, system: str, group: str = OVERALL) -> float:
        return werr(self.wer(self.baseline, group), self.wer(system, group))


def _transcripts_for(records: Sequence, system: Backend | Mapping[str, str]) -> dict[str, str]:
    if isinstance(system, Mapping):
        return dict(system)
    out = {}
    for rec in records:
        try:
            out[rec.id] = correct(system, CorrectionRequest(rec.id, "", backend=system.name, record=rec)).text
        except Exception:
            # missing transcript -> record is skipped and reported by run_eval
            continue
    return out


def run_eval(
    records: Iterable,
    systems: Mapping[str, Backend | Mapping[str, str]],
    group_by: str | None = "noise",
    baseline: str = ASR_1BEST,
    utterance_mean: bool = False,
) -> EvalReport:
    """Evaluate systems (stub backends or id -> transcript maps) on a dataset.

    ``asr_1best`` and ``vsr_1best`` are always available. Records that fail
    (empty reference, missing transcript) are skipped and listed, not fatal.
    """
    records = list(records)
    names = list(BUILTIN_SYSTEMS) + [n for n in systems if n not in BUILTIN_SYSTEMS]
    if baseline not in names:
        raise UnknownBaseline(f"baseline {baseline!r} is not among systems {names}")
    outputs = {name: _transcripts_for(records, sys) for name, sys in systems.items()}

    groups: dict[str, GroupStats] = {}
    skipped: dict[str, str] = {}
    for rec in records:
        ref = rec.ref_tokens
        try:
            if not ref:
                raise EmptyReference()
            hyps = {ASR_1BEST: rec.asr.best.tokens, VSR_1BEST: rec.vsr.best.tokens}
            for name, trans in outputs.items():
                if rec.id not in trans:
                    raise KeyError(f"no {name} transcript")
                hyps[name] = normalize(trans[rec.id])
            errs = {name: edit_distance(ref, h) for name, h in hyps.items()}
            dual = oracle_dual(ref, rec.dual)
        except Exception as exc:
            skipped[rec.id] = str(exc) or type(exc).__name__
            continue
        key = UNTAGGED if group_by is None else rec.tags.get(group_by, UNTAGGED)
        oracle_errs = {s: (r.onb_errors, r.ocp_errors) for s, r in dual.by_stream().items()}
        groups.setdefault(key, GroupStats()).add_record(len(ref), errs, oracle_errs)

    overall = GroupStats()
    for g in groups.values():
        overall.merge(g)
    if group_by is None:
        groups = {}
    return EvalReport(names, baseline, group_by, groups, overall, skipped, len(records), utterance_mean)


def _bucket(snr: float, buckets: Sequence[float] | None) -> float:
    if not buckets:
        return snr
    # nearest bucket centre, lower one on ties
    return min(buckets, key=lambda b: (abs(snr - b), b))


def werr_curve(
    records: Iterable,
    system: Backend | Mapping[str, str],
    baseline: Backend | Mapping[str, str] | str = ASR_1BEST,
    snr_buckets: Sequence[float] | None = None,
) -> list[tuple[float, float]]:
    """(snr_db, WERR) per SNR bucket that holds at least one record."""
    records = list(records)
    by_bucket: dict[float, list] = {}
    for rec in records:
        snr = rec.snr_db()
        if snr is None:
            raise MissingSnr(f"record {rec.id} has no audio SNR")
        by_bucket.setdefault(_bucket(snr, snr_buckets), []).append(rec)
    systems = {"system": system}
    base_name = baseline if isinstance(baseline, str) else "baseline"
    if not isinstance(baseline, str):
        systems["baseline"] = baseline
    out = []
    for snr in sorted(by_bucket):
        rep = run_eval(by_bucket[snr], systems, group_by=None, baseline=base_name)
        if rep.n_evaluated:
            out.append((snr, rep.werr("system")))
    return out
