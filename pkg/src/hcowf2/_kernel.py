"""Compiled inner loop for the chained evaluation.

Each step evaluates all n*n clauses at once with occurrence bitsets:
``occ[b, v]`` has bit ``c`` set when clause ``c`` is satisfied by variable
``v`` taking value ``b``.  OR-ing the rows selected by the current input gives
the clause-satisfaction bitset; output bit ``j`` is set when all of its
clause bits are.  Falls back to numpy when numba is unavailable.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None


def occurrence_table(variables: np.ndarray, negated: np.ndarray, n: int) -> np.ndarray:
    clauses = variables.shape[0]
    words = (clauses + 63) // 64
    occ = np.zeros((2, 2 * n, words), dtype=np.uint64)
    c = np.repeat(np.arange(clauses), variables.shape[1])
    np.bitwise_or.at(
        occ,
        (1 - negated.ravel().astype(np.int64), variables.ravel().astype(np.int64), c >> 6),
        np.left_shift(np.uint64(1), (c & 63).astype(np.uint64)),
    )
    return occ


def _chain_numpy(occ, qbits, p, states):
    n = p.shape[0]
    clauses = n * n
    x = np.empty(2 * n, dtype=np.intp)
    x[:n] = p
    prev = np.zeros(n, dtype=np.uint8)
    record = states.shape[0] > 0
    if record:
        states[0] = p
    shifts = np.arange(64, dtype=np.uint64)
    steps = 0
    for i in range(qbits.shape[0]):
        x[n:] = qbits[i]
        acc = np.bitwise_or.reduce(occ[x, np.arange(2 * n)], axis=0)
        sat = ((acc[:, None] >> shifts) & np.uint64(1)).ravel()[:clauses]
        out = sat.reshape(n, n).all(axis=1).astype(np.uint8)
        nxt = out ^ prev
        prev = x[:n].astype(np.uint8)
        x[:n] = nxt
        steps += 1
        if record:
            states[i + 1] = nxt
    return x[:n].astype(np.uint8), steps


def _chain_loops(occ, qbits, p, states):
    n = p.shape[0]
    words = occ.shape[2]
    x = np.empty(2 * n, dtype=np.uint8)
    x[:n] = p
    prev = np.zeros(n, dtype=np.uint8)
    acc = np.empty(words, dtype=np.uint64)
    out = np.empty(n, dtype=np.uint8)
    one = np.uint64(1)
    record = states.shape[0] > 0
    if record:
        states[0] = p
    steps = 0
    for i in range(qbits.shape[0]):
        x[n:] = qbits[i]
        acc[:] = 0
        for v in range(2 * n):
            row = occ[x[v], v]
            for w in range(words):
                acc[w] |= row[w]
        for j in range(n):
            bit = 1
            for c in range(j * n, (j + 1) * n):
                if not (acc[c >> 6] >> np.uint64(c & 63)) & one:
                    bit = 0
                    break
            out[j] = bit
        for j in range(n):
            current = x[j]
            x[j] = out[j] ^ prev[j]
            prev[j] = current
        steps += 1
        if record:
            states[i + 1] = x[:n]
    return x[:n].copy(), steps


chain = njit(cache=True, nogil=True)(_chain_loops) if njit is not None else _chain_numpy
