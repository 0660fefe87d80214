# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pycore``.

Cover routines work on uint64 bitmasks and therefore handle universes of at
most 64 elements; ``rieszcap._core`` routes larger ones to the fallback.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

BACKEND = "cython"

ctypedef unsigned long long u64


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def ball_mass_tables(dist, mass):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] m = np.ascontiguousarray(mass, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] open_m = np.empty((n, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] closed_m = np.empty((n, n))
    cdef cnp.ndarray[cnp.intp_t, ndim=1] order
    cdef double[:] prefix = np.empty(n + 1)
    cdef double[:] srt = np.empty(n)
    cdef Py_ssize_t i, k, a, b, j
    cdef double v
    for i in range(n):
        order = np.argsort(d[i], kind="stable")
        prefix[0] = 0.0
        for k in range(n):
            srt[k] = d[i, order[k]]
            prefix[k + 1] = prefix[k] + m[order[k]]
        # walk runs of equal distances; every member of a run shares both masses
        a = 0
        while a < n:
            v = srt[a]
            b = a
            while b + 1 < n and srt[b + 1] == v:
                b += 1
            for k in range(a, b + 1):
                j = order[k]
                open_m[i, j] = prefix[a]
                closed_m[i, j] = prefix[b + 1]
            a = b + 1
    return open_m, closed_m


def triangle_violation(dist, double rtol):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double slack = rtol * (d.max() if n else 0.0)
    cdef double dij
    for j in range(n):
        for i in range(n):
            dij = d[i, j]
            for k in range(n):
                if d[i, k] > dij + d[j, k] + slack:
                    return int(i), int(j), int(k)
    return None


def five_r_select(dist, radii, order):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r = np.ascontiguousarray(radii, dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] o = np.ascontiguousarray(order, dtype=np.intp)
    cdef Py_ssize_t n_sel = 0, t, q, i, s
    cdef cnp.ndarray[cnp.intp_t, ndim=1] sel = np.empty(o.shape[0], dtype=np.intp)
    cdef bint ok
    for t in range(o.shape[0]):
        i = o[t]
        ok = True
        for q in range(n_sel):
            s = sel[q]
            if d[i, s] < r[i] + r[s]:
                ok = False
                break
        if ok:
            sel[n_sel] = i
            n_sel += 1
    return [int(sel[q]) for q in range(n_sel)]


def greedy_cover(masks, weights, universe):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] mk = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef u64 uncovered = <u64>universe
    cdef Py_ssize_t m = mk.shape[0], c, best
    cdef int gain
    cdef double ratio, best_ratio, total = 0.0
    chosen = []
    while uncovered:
        best = -1
        best_ratio = INFINITY
        for c in range(m):
            gain = __builtin_popcountll(mk[c] & uncovered)
            if gain == 0:
                continue
            ratio = w[c] / gain
            if ratio < best_ratio:
                best_ratio = ratio
                best = c
        if best < 0:
            raise ValueError("candidates do not cover the universe")
        chosen.append(int(best))
        total += w[best]
        uncovered &= ~mk[best]
    return total, chosen


cdef struct Search:
    u64 universe
    u64* masks
    double* weights
    int n_elem
    int* elems            # element bit positions
    int* branch_order     # elements, lowest frequency first
    int* cont_start       # CSR over bit positions 0..63
    int* cont             # candidates containing each element, sorted
    long long nodes
    long long node_cap
    bint exceeded
    double best
    int* best_chosen
    int best_len
    int* chosen


cdef double _lower_bound(Search* S, u64 uncovered) noexcept nogil:
    cdef double lb = 0.0, price, v
    cdef int t, e, q, c, gain
    for t in range(S.n_elem):
        e = S.elems[t]
        if not ((uncovered >> e) & 1):
            continue
        price = INFINITY
        for q in range(S.cont_start[e], S.cont_start[e + 1]):
            c = S.cont[q]
            gain = __builtin_popcountll(S.masks[c] & uncovered)
            v = S.weights[c] / gain
            if v < price:
                price = v
        lb += price
    return lb


cdef void _visit(Search* S, u64 covered, double cost, int depth) noexcept nogil:
    cdef u64 uncovered
    cdef int t, e, q, c
    S.nodes += 1
    if S.nodes > S.node_cap:
        S.exceeded = True
        return
    uncovered = S.universe & ~covered
    if uncovered == 0:
        if cost < S.best * (1.0 - 1e-12):
            S.best = cost
            S.best_len = depth
            for t in range(depth):
                S.best_chosen[t] = S.chosen[t]
        return
    if cost + _lower_bound(S, uncovered) >= S.best * (1.0 - 1e-12):
        return
    e = -1
    for t in range(S.n_elem):
        if (uncovered >> S.branch_order[t]) & 1:
            e = S.branch_order[t]
            break
    for q in range(S.cont_start[e], S.cont_start[e + 1]):
        c = S.cont[q]
        S.chosen[depth] = c
        _visit(S, covered | S.masks[c], cost + S.weights[c], depth + 1)
        if S.exceeded:
            return


def _prepare(mk, w, universe_py):
    m = len(mk)
    elems = [e for e in range(64) if (universe_py >> e) & 1]
    containing = {e: [c for c in range(m) if (int(mk[c]) >> e) & 1] for e in elems}
    for e in elems:
        if not containing[e]:
            raise ValueError("candidates do not cover the universe")
    branch = sorted(elems, key=lambda x: (len(containing[x]), x))
    for e in elems:
        containing[e].sort(key=lambda x: (w[x] / bin(int(mk[x]) & universe_py).count("1"), x))
    starts = [0]
    flat = []
    for e in range(64):
        flat.extend(containing.get(e, []))
        starts.append(len(flat))
    return elems, branch, starts, flat


def bnb_cover(masks, weights, universe, long long node_cap):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] mk = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef u64 uni = <u64>universe
    cdef Search S
    cdef int t

    universe_py = int(universe)
    elems, branch, starts, flat = _prepare(mk, w, universe_py)
    total0, chosen0 = greedy_cover(mk, w, universe_py)

    cdef cnp.ndarray[cnp.int32_t, ndim=1] a_elems = np.asarray(elems, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] a_branch = np.asarray(branch, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] a_start = np.asarray(starts, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] a_cont = np.asarray(flat if flat else [0], dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] a_best = np.zeros(len(elems) + 1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] a_chosen = np.zeros(len(elems) + 1, dtype=np.int32)

    S.universe = uni
    S.masks = <u64*> mk.data
    S.weights = <double*> w.data
    S.n_elem = len(elems)
    S.elems = <int*> a_elems.data
    S.branch_order = <int*> a_branch.data
    S.cont_start = <int*> a_start.data
    S.cont = <int*> a_cont.data
    S.nodes = 0
    S.node_cap = node_cap
    S.exceeded = False
    S.best = total0
    for t in range(len(chosen0)):
        if t < len(elems) + 1:
            a_best[t] = chosen0[t]
    S.best_chosen = <int*> a_best.data
    S.best_len = -1
    S.chosen = <int*> a_chosen.data

    with nogil:
        _visit(&S, 0, 0.0, 0)

    if S.best_len < 0:
        best_chosen = sorted(chosen0)
    else:
        best_chosen = sorted([int(a_best[t]) for t in range(S.best_len)])
    return float(S.best), best_chosen, int(S.nodes), not S.exceeded
