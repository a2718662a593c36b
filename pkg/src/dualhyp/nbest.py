"""N-best hypothesis lists and the dual (ASR + VSR) union view."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import Enum

from .align import Tokens, normalize
from .errors import EmptyList


class Modality(str, Enum):
    ASR = "asr"
    VSR = "vsr"
    AVSR = "avsr"


@dataclass(frozen=True)
class Hypothesis:
    text: str
    score: float

    @property
    def tokens(self) -> Tokens:
        return normalize(self.text)


@dataclass(frozen=True)
class NBestList:
    """Candidates ordered by descending log-likelihood; entry 0 is the 1-best."""

    entries: tuple[Hypothesis, ...]
    modality: Modality = Modality.ASR

    def __post_init__(self) -> None:
        if not self.entries:
            raise EmptyList()
        for a, b in zip(self.entries, self.entries[1:]):
            if b.score > a.score:
                raise ValueError("scores not descending")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, float]], modality: Modality = Modality.ASR) -> NBestList:
        return cls(tuple(Hypothesis(t, float(s)) for t, s in pairs), modality)

    @classmethod
    def from_texts(cls, texts: Sequence[str], modality: Modality = Modality.ASR) -> NBestList:
        """Rank-ordered texts with synthetic scores 0, -1, -2, ..."""
        return cls(tuple(Hypothesis(t, -float(i)) for i, t in enumerate(texts)), modality)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Hypothesis]:
        return iter(self.entries)

    @property
    def best(self) -> Hypothesis:
        return self.entries[0]

    def token_lists(self) -> list[Tokens]:
        return [h.tokens for h in self.entries]


@dataclass(frozen=True)
class DualHypotheses:
    asr: NBestList
    vsr: NBestList

    @property
    def union(self) -> tuple[Hypothesis, ...]:
        """ASR entries followed by VSR entries."""
        return self.asr.entries + self.vsr.entries

    def __len__(self) -> int:
        return len(self.asr) + len(self.vsr)
