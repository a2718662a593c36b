"""N-best, compositional and dual-stream oracle WERs.

The compositional oracle is the order-free coverage bound: a reference
occurrence of word ``w`` counts as recoverable while the hypotheses
collectively still hold unused occurrences of ``w`` (occurrence counts are
summed over all hypotheses). The order-aware variant lives in
:func:`dualhyp.confusion.oracle_path` and is reported separately.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .align import Tokens, edit_distance
from .errors import EmptyList, EmptyReference, RecordError
from .nbest import DualHypotheses, NBestList

STREAMS = ("A", "V", "A+V")


@dataclass(frozen=True)
class OracleResult:
    onb_wer: float
    onb_index: int
    ocp_wer: float
    # raw counts, kept so corpus aggregation can stay error-weighted
    onb_errors: int = 0
    ocp_errors: int = 0
    best1_errors: int = 0
    ref_len: int = 0

    @property
    def best1_wer(self) -> float:
        return self.best1_errors / self.ref_len if self.ref_len else 0.0


def _as_token_lists(hyps: NBestList | Iterable) -> list[Tokens]:
    if isinstance(hyps, NBestList):
        return hyps.token_lists()
    out = []
    for h in hyps:
        out.append(h.tokens if hasattr(h, "tokens") else tuple(h))
    return out


def oracle_nbest(ref: Sequence[str], hyps) -> tuple[int, float]:
    """Index and WER of the hypothesis closest to ``ref`` (ties: lowest index)."""
    idx, errs = _nbest_errors(ref, _as_token_lists(hyps))
    return idx, errs / len(ref)


def _nbest_errors(ref: Sequence[str], lists: list[Tokens]) -> tuple[int, int]:
    if not ref:
        raise EmptyReference()
    if not lists:
        raise EmptyList()
    best_i, best_e = 0, None
    for i, h in enumerate(lists):
        e = edit_distance(ref, h)
        if best_e is None or e < best_e:
            best_i, best_e = i, e
    return best_i, best_e


def _uncovered(ref: Sequence[str], lists: list[Tokens]) -> int:
    need = Counter(ref)
    have: Counter[str] = Counter()
    for h in lists:
        have.update(h)
    covered = sum(min(c, have[w]) for w, c in need.items())
    return len(ref) - covered


def oracle_compositional(ref: Sequence[str], *lists) -> float:
    """Coverage-oracle WER over one or more hypothesis lists."""
    if not ref:
        raise EmptyReference()
    pool: list[Tokens] = []
    for lst in lists:
        pool.extend(_as_token_lists(lst))
    if not pool:
        raise EmptyList()
    return _uncovered(ref, pool) / len(ref)


def _result(ref: Sequence[str], lists: list[Tokens]) -> OracleResult:
    idx, onb = _nbest_errors(ref, lists)
    ocp = _uncovered(ref, lists)
    n = len(ref)
    return OracleResult(
        onb_wer=onb / n,
        onb_index=idx,
        ocp_wer=ocp / n,
        onb_errors=onb,
        ocp_errors=ocp,
        best1_errors=edit_distance(ref, lists[0]),
        ref_len=n,
    )


@dataclass(frozen=True)
class DualOracle:
    union: OracleResult
    asr: OracleResult
    vsr: OracleResult

    def by_stream(self) -> dict[str, OracleResult]:
        return {"A": self.asr, "V": self.vsr, "A+V": self.union}


def oracle_dual(ref: Sequence[str], dual: DualHypotheses) -> DualOracle:
    """Oracles over the ASR+VSR union, plus each stream alone for comparison.

    ``union.onb_index`` indexes the concatenated list (ASR entries first).
    """
    a = dual.asr.token_lists()
    v = dual.vsr.token_lists()
    return DualOracle(union=_result(ref, a + v), asr=_result(ref, a), vsr=_result(ref, v))


@dataclass
class CorpusOracleRow:
    stream: str
    ref_words: int = 0
    best1_errors: int = 0
    onb_errors: int = 0
    ocp_errors: int = 0
    n_records: int = 0

    def add(self, r: OracleResult) -> None:
        self.ref_words += r.ref_len
        self.best1_errors += r.best1_errors
        self.onb_errors += r.onb_errors
        self.ocp_errors += r.ocp_errors
        self.n_records += 1

    def merge(self, other: CorpusOracleRow) -> CorpusOracleRow:
        return CorpusOracleRow(
            self.stream,
            self.ref_words + other.ref_words,
            self.best1_errors + other.best1_errors,
            self.onb_errors + other.onb_errors,
            self.ocp_errors + other.ocp_errors,
            self.n_records + other.n_records,
        )

    def _rate(self, errors: int) -> float:
        return errors / self.ref_words if self.ref_words else 0.0

    @property
    def best1_wer(self) -> float:
        return self._rate(self.best1_errors)

    @property
    def onb_wer(self) -> float:
        return self._rate(self.onb_errors)

    @property
    def ocp_wer(self) -> float:
        return self._rate(self.ocp_errors)


@dataclass
class CorpusOracle:
    rows: dict[str, CorpusOracleRow] = field(default_factory=lambda: {s: CorpusOracleRow(s) for s in STREAMS})
    # per-utterance mean accumulators: stream -> [sum best1, sum onb, sum ocp]
    utt_sums: dict[str, list[float]] = field(default_factory=lambda: {s: [0.0, 0.0, 0.0] for s in STREAMS})

    def add(self, dual: DualOracle) -> None:
        for s, r in dual.by_stream().items():
            self.rows[s].add(r)
            acc = self.utt_sums[s]
            acc[0] += r.best1_wer
            acc[1] += r.onb_wer
            acc[2] += r.ocp_wer

    def utterance_mean(self, stream: str) -> tuple[float, float, float]:
        n = self.rows[stream].n_records
        if not n:
            return (0.0, 0.0, 0.0)
        a, b, c = self.utt_sums[stream]
        return (a / n, b / n, c / n)


def corpus_oracle(records: Iterable) -> CorpusOracle:
    """Error-weighted oracle table (A, V, A+V) over a stream of dataset records."""
    out = CorpusOracle()
    for rec in records:
        try:
            out.add(oracle_dual(rec.ref_tokens, rec.dual))
        except Exception as exc:
            raise RecordError(rec.id, exc) from exc
    return out
