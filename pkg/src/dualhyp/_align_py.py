"""Pure-Python word-level Levenshtein kernels (fallback for ``_align_ext``)."""

from __future__ import annotations

from collections.abc import Sequence


def edit_distance(ref: Sequence[int], hyp: Sequence[int]) -> int:
    n, m = len(ref), len(hyp)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        r = ref[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + (r != hyp[j - 1])
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev = cur
    return prev[m]


def edit_ops(ref: Sequence[int], hyp: Sequence[int]) -> bytes:
    """Op codes (0=C, 1=S, 2=D, 3=I) of the tie-broken minimal alignment, in order."""
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        d[i][0] = i
        row, up = d[i], d[i - 1]
        r = ref[i - 1]
        for j in range(1, m + 1):
            best = up[j - 1] + (r != hyp[j - 1])
            if up[j] + 1 < best:
                best = up[j] + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            row[j] = best

    ops = bytearray()
    i, j = n, m
    while i > 0 or j > 0:
        here = d[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and here == d[i - 1][j - 1]:
            ops.append(0)
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and here == d[i - 1][j - 1] + 1:
            ops.append(1)
            i -= 1
            j -= 1
        elif i > 0 and here == d[i - 1][j] + 1:
            ops.append(2)
            i -= 1
        else:
            ops.append(3)
            j -= 1
    ops.reverse()
    return bytes(ops)
