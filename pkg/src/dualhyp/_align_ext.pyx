# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled word-level Levenshtein kernels.

Tokens arrive pre-interned as integer ids. Op codes: 0 correct,
1 substitute, 2 delete, 3 insert. Must stay behaviourally identical to
``_align_py``.
"""
from libc.stdlib cimport malloc, free


cdef int* _to_c(seq, Py_ssize_t n) except NULL:
    cdef int* out = <int*> malloc((n + 1) * sizeof(int))
    if out == NULL:
        raise MemoryError()
    cdef Py_ssize_t k
    for k in range(n):
        out[k] = seq[k]
    return out


def edit_distance(ref, hyp):
    cdef Py_ssize_t n = len(ref), m = len(hyp), i, j
    if n == 0:
        return m
    if m == 0:
        return n
    cdef int* r = _to_c(ref, n)
    cdef int* h = _to_c(hyp, m)
    cdef int* prev = <int*> malloc((m + 1) * sizeof(int))
    cdef int* cur = <int*> malloc((m + 1) * sizeof(int))
    cdef int* tmp
    cdef int best, cand, result
    try:
        if prev == NULL or cur == NULL:
            raise MemoryError()
        for j in range(m + 1):
            prev[j] = j
        for i in range(1, n + 1):
            cur[0] = i
            for j in range(1, m + 1):
                best = prev[j - 1] + (0 if r[i - 1] == h[j - 1] else 1)
                cand = prev[j] + 1
                if cand < best:
                    best = cand
                cand = cur[j - 1] + 1
                if cand < best:
                    best = cand
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        result = prev[m]
    finally:
        free(r)
        free(h)
        free(prev)
        free(cur)
    return result


def edit_ops(ref, hyp):
    cdef Py_ssize_t n = len(ref), m = len(hyp), i, j, w = m + 1
    cdef int* r = _to_c(ref, n)
    cdef int* h = _to_c(hyp, m)
    cdef int* d = <int*> malloc((n + 1) * (m + 1) * sizeof(int))
    cdef unsigned char* ops = <unsigned char*> malloc(n + m + 1)
    cdef Py_ssize_t nops = 0
    cdef int best, cand, here
    try:
        if d == NULL or ops == NULL:
            raise MemoryError()
        for j in range(m + 1):
            d[j] = j
        for i in range(1, n + 1):
            d[i * w] = i
            for j in range(1, m + 1):
                best = d[(i - 1) * w + j - 1] + (0 if r[i - 1] == h[j - 1] else 1)
                cand = d[(i - 1) * w + j] + 1
                if cand < best:
                    best = cand
                cand = d[i * w + j - 1] + 1
                if cand < best:
                    best = cand
                d[i * w + j] = best
        i = n
        j = m
        while i > 0 or j > 0:
            here = d[i * w + j]
            if i > 0 and j > 0 and r[i - 1] == h[j - 1] and here == d[(i - 1) * w + j - 1]:
                ops[nops] = 0
                i -= 1
                j -= 1
            elif i > 0 and j > 0 and r[i - 1] != h[j - 1] and here == d[(i - 1) * w + j - 1] + 1:
                ops[nops] = 1
                i -= 1
                j -= 1
            elif i > 0 and here == d[(i - 1) * w + j] + 1:
                ops[nops] = 2
                i -= 1
            else:
                ops[nops] = 3
                j -= 1
            nops += 1
        out = (<char*> ops)[:nops][::-1]
    finally:
        free(r)
        free(h)
        free(d)
        free(ops)
    return out
