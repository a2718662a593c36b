"""ROVER-style confusion networks: construction, weighted voting, oracle path.

A network is a list of slots; each slot maps a token (or ``EPS``, the
empty arc) to the accumulated weight of the hypotheses that pass through
it. Construction and every tie-break are deterministic.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

from .align import Tokens
from .errors import EmptyList, EmptyReference, LengthMismatch

EPS = None
_TIE = 1e-12


def weights_from_scores(scores: Sequence[float], lengths: Sequence[int]) -> list[float]:
    """Softmax over length-normalized log-likelihoods (temperature 1)."""
    if not scores:
        raise EmptyList()
    if len(scores) != len(lengths):
        raise LengthMismatch(f"{len(scores)} scores but {len(lengths)} lengths")
    norm = [s / max(int(n), 1) for s, n in zip(scores, lengths)]
    top = max(norm)
    exps = [math.exp(x - top) for x in norm]
    total = sum(exps)
    return [e / total for e in exps]


@dataclass
class ConfusionNetwork:
    slots: list[dict[str | None, float]] = field(default_factory=list)
    sources: int = 0
    total_weight: float = 0.0

    def __len__(self) -> int:
        return len(self.slots)

    def accepts(self, tokens: Sequence[str]) -> bool:
        """True if some path through the slots spells exactly ``tokens``."""
        reach = {0}
        for slot in self.slots:
            nxt = set()
            for i in reach:
                if EPS in slot:
                    nxt.add(i)
                if i < len(tokens) and tokens[i] in slot:
                    nxt.add(i + 1)
            reach = nxt
            if not reach:
                return False
        return len(tokens) in reach

    def entries(self, k: int) -> list[str | None]:
        """Slot ``k`` entries sorted lexicographically, epsilon last."""
        slot = self.slots[k]
        toks = sorted(t for t in slot if t is not EPS)
        if EPS in slot:
            toks.append(EPS)
        return toks


def _merge(cn: ConfusionNetwork, hyp: Tokens, w: float) -> None:
    K, m = len(cn.slots), len(hyp)
    inf = math.inf
    d = [[inf] * (m + 1) for _ in range(K + 1)]
    d[0][0] = 0
    for k in range(K + 1):
        for i in range(m + 1):
            here = d[k][i]
            if here == inf:
                continue
            if k < K:
                slot = cn.slots[k]
                if i < m:
                    c = here + (0 if hyp[i] in slot else 1)
                    if c < d[k + 1][i + 1]:
                        d[k + 1][i + 1] = c
                c = here + (0 if EPS in slot else 1)
                if c < d[k + 1][i]:
                    d[k + 1][i] = c
            if i < m and here + 1 < d[k][i + 1]:
                d[k][i + 1] = here + 1

    # backtrace: prefer slot-consuming match/substitution, then slot skip, then new slot
    ops: list[tuple[str, int, int]] = []
    k, i = K, m
    while k > 0 or i > 0:
        here = d[k][i]
        if k > 0 and i > 0 and here == d[k - 1][i - 1] + (0 if hyp[i - 1] in cn.slots[k - 1] else 1):
            ops.append(("tok", k - 1, i - 1))
            k -= 1
            i -= 1
        elif k > 0 and here == d[k - 1][i] + (0 if EPS in cn.slots[k - 1] else 1):
            ops.append(("eps", k - 1, -1))
            k -= 1
        else:
            ops.append(("new", -1, i - 1))
            i -= 1
    ops.reverse()

    prior = cn.total_weight
    out: list[dict[str | None, float]] = []
    for kind, k, i in ops:
        if kind == "new":
            slot: dict[str | None, float] = {EPS: prior}
            slot[hyp[i]] = slot.get(hyp[i], 0.0) + w
            out.append(slot)
            continue
        slot = cn.slots[k]
        key = hyp[i] if kind == "tok" else EPS
        slot[key] = slot.get(key, 0.0) + w
        out.append(slot)
    cn.slots = out
    cn.sources += 1
    cn.total_weight += w


def build_cn(hyps: Sequence[Sequence[str]], weights: Sequence[float] | None = None) -> ConfusionNetwork:
    """Merge hypotheses in descending-weight order (ties: input order)."""
    if not hyps:
        raise EmptyList()
    if weights is None:
        weights = [1.0 / len(hyps)] * len(hyps)
    if len(weights) != len(hyps):
        raise LengthMismatch(f"{len(hyps)} hypotheses but {len(weights)} weights")
    order = sorted(range(len(hyps)), key=lambda j: (-weights[j], j))
    cn = ConfusionNetwork()
    first = order[0]
    cn.slots = [{t: weights[first]} for t in hyps[first]]
    cn.sources = 1
    cn.total_weight = weights[first]
    for j in order[1:]:
        _merge(cn, tuple(hyps[j]), weights[j])
    return cn


def vote(cn: ConfusionNetwork) -> Tokens:
    """Heaviest entry per slot; ties go to the lexicographically smallest token, epsilon last."""
    out = []
    for k, slot in enumerate(cn.slots):
        best_tok, best_w = None, -math.inf
        for tok in cn.entries(k):
            wt = slot[tok]
            if wt > best_w + _TIE:
                best_tok, best_w = tok, wt
        if best_tok is not EPS:
            out.append(best_tok)
    return tuple(out)


def oracle_path(cn: ConfusionNetwork, ref: Sequence[str]) -> tuple[Tokens, float]:
    """Minimum-WER token sequence realizable as a path through ``cn``.

    Preference among equally good moves: correct word, epsilon,
    substitution, inserted word, deleted reference word.
    """
    n = len(ref)
    if n == 0:
        raise EmptyReference()
    K = len(cn.slots)
    inf = math.inf
    # cost-to-go from (slot k, ref position i)
    g = [[inf] * (n + 1) for _ in range(K + 1)]
    for i in range(n + 1):
        g[K][i] = n - i
    for k in range(K - 1, -1, -1):
        slot = cn.slots[k]
        row, nxt = g[k], g[k + 1]
        for i in range(n, -1, -1):
            best = row[i + 1] + 1 if i < n else inf
            for tok in slot:
                if tok is EPS:
                    c = nxt[i]
                else:
                    c = nxt[i] + 1
                    if i < n:
                        c = min(c, nxt[i + 1] + (tok != ref[i]))
                if c < best:
                    best = c
            row[i] = best

    path: list[str] = []
    k = i = 0
    while k < K or i < n:
        target = g[k][i]
        moved = False
        if k < K:
            ents = cn.entries(k)
            toks = [t for t in ents if t is not EPS]
            if i < n and ref[i] in cn.slots[k] and g[k + 1][i + 1] == target:
                path.append(ref[i])
                k, i, moved = k + 1, i + 1, True
            elif EPS in cn.slots[k] and g[k + 1][i] == target:
                k, moved = k + 1, True
            else:
                for t in toks:
                    if i < n and t != ref[i] and g[k + 1][i + 1] + 1 == target:
                        path.append(t)
                        k, i, moved = k + 1, i + 1, True
                        break
                if not moved:
                    for t in toks:
                        if g[k + 1][i] + 1 == target:
                            path.append(t)
                            k, moved = k + 1, True
                            break
        if not moved:
            # only a reference deletion remains optimal
            i += 1
    return tuple(path), g[0][0] / n
