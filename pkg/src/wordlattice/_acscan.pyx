# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Aho-Corasick scan kernel.

Walks a flattened automaton (CSR transition table + failure links +
per-node output pattern lengths) over a code-point array and reports
1-based closed match spans. Mirrors _acscan_py.scan exactly.
"""

from libc.stdlib cimport free, malloc, realloc

import numpy as np


cdef inline int _step(
    const long long[::1] trans_start,
    const unsigned int[::1] trans_keys,
    const int[::1] trans_vals,
    int state,
    unsigned int c,
) noexcept nogil:
    cdef long long lo = trans_start[state]
    cdef long long hi = trans_start[state + 1]
    cdef long long mid
    while lo < hi:
        mid = (lo + hi) // 2
        if trans_keys[mid] < c:
            lo = mid + 1
        elif trans_keys[mid] > c:
            hi = mid
        else:
            return trans_vals[mid]
    return -1


def scan(
    const unsigned int[::1] codes,
    const long long[::1] trans_start,
    const unsigned int[::1] trans_keys,
    const int[::1] trans_vals,
    const int[::1] fail,
    const long long[::1] out_start,
    const int[::1] out_lens,
):
    """Return (starts, ends) int64 arrays of 1-based closed match spans."""
    cdef Py_ssize_t n = codes.shape[0]
    cdef long long cap = 256
    cdef long long m = 0
    cdef int state = 0
    cdef int nxt
    cdef int oom = 0
    cdef unsigned int c
    cdef Py_ssize_t i
    cdef long long k
    cdef long long[::1] s_view
    cdef long long[::1] e_view
    cdef long long* tmp
    cdef long long* s_buf = <long long*> malloc(cap * sizeof(long long))
    cdef long long* e_buf = <long long*> malloc(cap * sizeof(long long))
    if s_buf == NULL or e_buf == NULL:
        free(s_buf)
        free(e_buf)
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                c = codes[i]
                nxt = _step(trans_start, trans_keys, trans_vals, state, c)
                while nxt < 0 and state != 0:
                    state = fail[state]
                    nxt = _step(trans_start, trans_keys, trans_vals, state, c)
                state = nxt if nxt >= 0 else 0
                for k in range(out_start[state], out_start[state + 1]):
                    if m == cap:
                        cap *= 2
                        tmp = <long long*> realloc(s_buf, cap * sizeof(long long))
                        if tmp == NULL:
                            oom = 1
                            break
                        s_buf = tmp
                        tmp = <long long*> realloc(e_buf, cap * sizeof(long long))
                        if tmp == NULL:
                            oom = 1
                            break
                        e_buf = tmp
                    s_buf[m] = i + 2 - out_lens[k]
                    e_buf[m] = i + 1
                    m += 1
                if oom:
                    break
        if oom:
            raise MemoryError()
        starts = np.empty(m, dtype=np.int64)
        ends = np.empty(m, dtype=np.int64)
        if m > 0:
            s_view = starts
            e_view = ends
            for k in range(m):
                s_view[k] = s_buf[k]
                e_view[k] = e_buf[k]
        return starts, ends
    finally:
        free(s_buf)
        free(e_buf)
