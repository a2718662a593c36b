"""Seeded synthetic dual-hypothesis datasets for tests, smoke runs and benchmarks."""

from __future__ import annotations

import numpy as np

from .corruption import AUDIO_KINDS, CorruptionSpec, Stream, make_rng
from .dataset import DualRecord
from .nbest import Hypothesis, Modality, NBestList
from .relmask import CHUNK_S

SNR_LEVELS_DB = (-10.0, -5.0, 0.0, 5.0, 10.0)


def _vocab(size: int) -> list[str]:
    return [f"w{i:02d}" for i in range(size)]


def _mutate(ref: list[str], vocab: list[str], rate: float, rng: np.random.Generator) -> list[str]:
    """Apply independent per-token substitutions/deletions and occasional insertions."""
    out: list[str] = []
    for tok in ref:
        u = rng.random()
        if u < rate / 2:
            out.append(vocab[int(rng.integers(len(vocab)))])
        elif u < rate * 0.75:
            continue
        else:
            out.append(tok)
        if rng.random() < rate / 4:
            out.append(vocab[int(rng.integers(len(vocab)))])
    return out or [vocab[int(rng.integers(len(vocab)))]]


def _nbest(ref, vocab, rate, n, modality, rng) -> NBestList:
    # hypotheses share most of their errors, like real n-best lists
    base = _mutate(ref, vocab, rate, rng)
    scores = np.sort(rng.uniform(-20.0, -0.1, size=n))[::-1]
    return NBestList(
        tuple(Hypothesis(" ".join(_mutate(base, vocab, rate / 2, rng)), round(float(s), 4)) for s in scores),
        modality,
    )


def synthetic_records(
    n: int,
    seed: int = 0,
    vocab_size: int = 20,
    max_ref_len: int = 12,
    n_best: int = 5,
) -> list[DualRecord]:
    """``n`` records with random references and noisy 5+5 style hypothesis lists.

    Audio is fully corrupted by a random noise kind at one of the standard
    SNR levels; the ASR error rate grows as the SNR drops while the VSR
    error rate is fixed.
    """
    rng = make_rng(seed)
    vocab = _vocab(vocab_size)
    records = []
    for i in range(n):
        length = int(rng.integers(1, max_ref_len + 1))
        ref = [vocab[int(rng.integers(vocab_size))] for _ in range(length)]
        kind = AUDIO_KINDS[int(rng.integers(len(AUDIO_KINDS)))]
        snr = SNR_LEVELS_DB[int(rng.integers(len(SNR_LEVELS_DB)))]
        asr_rate = float(np.clip(0.3 - 0.025 * snr, 0.02, 0.6))
        duration = round(CHUNK_S * (length + 1), 3)
        records.append(
            DualRecord(
                id=f"syn{i:06d}",
                ref=" ".join(ref),
                asr=_nbest(ref, vocab, asr_rate, n_best, Modality.ASR, rng),
                vsr=_nbest(ref, vocab, 0.3, n_best, Modality.VSR, rng),
                duration_s=duration,
                audio_corruption=CorruptionSpec(Stream.AUDIO, kind, ((0.0, duration),), snr),
                tags={"noise": kind, "snr_db": f"{snr:g}"},
            )
        )
    return records
