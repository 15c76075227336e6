"""Compiled inner loops for the large-n samplers."""

import numba
import numpy as np


@numba.njit(nogil=True, cache=True)
def pair_cycle_lengths(blue, red, out_len, out_off):
    """Cycle lengths of red o blue^{-1} for each row pair of (B, n) 0-based arrays.

    Sample b's lengths land in out_len[out_off[b]:out_off[b + 1]];
    out_len needs room for B * n entries in the worst case.
    """
    B, n = blue.shape
    inv = np.empty(n, np.int64)
    seen = np.zeros(n, np.bool_)
    pos = 0
    for b in range(B):
        for i in range(n):
            inv[blue[b, i]] = i
        seen[:] = False
        out_off[b] = pos
        for s in range(n):
            if seen[s]:
                continue
            length = 0
            j = s
            while not seen[j]:
                seen[j] = True
                j = red[b, inv[j]]
                length += 1
            out_len[pos] = length
            pos += 1
    out_off[B] = pos
    return pos


@numba.njit(nogil=True, cache=True)
def direct_cycle_lengths(rng, n, count, out_len, out_off):
    """Cycle lengths of `count` uniform permutations of [n], drawn without the permutation.

    The cycle through the smallest unplaced element has length uniform on
    1..m where m elements remain, which reproduces the cycle-type law of a
    uniform permutation exactly.
    """
    pos = 0
    for b in range(count):
        out_off[b] = pos
        m = n
        while m > 0:
            if pos == out_len.shape[0]:
                return -1
            length = rng.integers(1, m + 1)
            out_len[pos] = length
            pos += 1
            m -= length
    out_off[count] = pos
    return pos
