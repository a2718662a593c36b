"""Text normalization, word-level alignment and WER."""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum

from . import _kernels
from .errors import EmptyReference

Tokens = tuple[str, ...]

STRIP_CHARS = ".,?!;:\"()"


def normalize(raw_text: str, *, strip_punct: bool = True) -> Tokens:
    """Lowercase, whitespace-split, strip edge punctuation from each token.

    Tokens that become empty are dropped. Internal apostrophes (and any
    other internal punctuation) survive. ``strip_punct=False`` keeps
    punctuation-only tokens such as a detached ``"."``, which is how
    tokenizers that merely split on whitespace score them.
    """
    words = raw_text.lower().split()
    if not strip_punct:
        return tuple(words)
    out = []
    for w in words:
        w = w.strip(STRIP_CHARS)
        if w:
            out.append(w)
    return tuple(out)


class Op(str, Enum):
    CORRECT = "C"
    SUBSTITUTE = "S"
    DELETE = "D"
    INSERT = "I"


_OP_CODES = (Op.CORRECT, Op.SUBSTITUTE, Op.DELETE, Op.INSERT)


@dataclass(frozen=True)
class EditOp:
    op: Op
    ref: str | None
    hyp: str | None


@dataclass(frozen=True)
class Alignment:
    ops: tuple[EditOp, ...]
    correct: int
    substitutions: int
    deletions: int
    insertions: int

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.correct, self.substitutions, self.deletions, self.insertions)

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def ref_len(self) -> int:
        return self.correct + self.substitutions + self.deletions

    @property
    def hyp_len(self) -> int:
        return self.correct + self.substitutions + self.insertions

    def pretty(self) -> str:
        """Three-line sclite-style rendering (REF / HYP / ops)."""
        top, bottom, marks = [], [], []
        for e in self.ops:
            r = e.ref if e.ref is not None else "*" * len(e.hyp or "")
            h = e.hyp if e.hyp is not None else "*" * len(e.ref or "")
            width = max(len(r), len(h), 1)
            top.append(r.ljust(width))
            bottom.append(h.ljust(width))
            marks.append(("" if e.op is Op.CORRECT else e.op.value).ljust(width))
        return "REF: {}\nHYP: {}\nOPS: {}".format(" ".join(top), " ".join(bottom), " ".join(marks).rstrip())


def _intern(ref: Sequence[str], hyp: Sequence[str]) -> tuple[list[int], list[int]]:
    vocab: dict[str, int] = {}
    r = [vocab.setdefault(t, len(vocab)) for t in ref]
    h = [vocab.setdefault(t, len(vocab)) for t in hyp]
    return r, h


def align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Minimal unit-cost alignment; backtrace prefers C, then S, then D, then I."""
    r_ids, h_ids = _intern(ref, hyp)
    codes = _kernels.edit_ops(r_ids, h_ids)
    ops = []
    i = j = 0
    for code in codes:
        op = _OP_CODES[code]
        if op is Op.DELETE:
            ops.append(EditOp(op, ref[i], None))
            i += 1
        elif op is Op.INSERT:
            ops.append(EditOp(op, None, hyp[j]))
            j += 1
        else:
            ops.append(EditOp(op, ref[i], hyp[j]))
            i += 1
            j += 1
    tally = Counter(codes)
    return Alignment(tuple(ops), tally[0], tally[1], tally[2], tally[3])


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    """Word-level Levenshtein distance (S + D + I)."""
    r_ids, h_ids = _intern(ref, hyp)
    return _kernels.edit_distance(r_ids, h_ids)


def wer(ref: Sequence[str], hyp: Sequence[str]) -> float:
    if not ref:
        raise EmptyReference()
    return edit_distance(ref, hyp) / len(ref)


def wer_text(ref_text: str, hyp_text: str, *, strip_punct: bool = True) -> float:
    return wer(normalize(ref_text, strip_punct=strip_punct), normalize(hyp_text, strip_punct=strip_punct))


def percent(rate: float, places: int = 1) -> str:
    """Render a fraction as a percentage string, rounding half up."""
    q = Decimal(1).scaleb(-places)
    return str((Decimal(repr(rate)) * 100).quantize(q, rounding=ROUND_HALF_UP))
