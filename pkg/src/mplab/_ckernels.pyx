# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.  Semantics mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free, calloc
from libc.string cimport memcpy

cnp.import_array()

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


def triangle_witness(const double[:, ::1] D, bint ultra, double rtol):
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t x, y, z
    cdef double a, b, bound
    for y in range(n):
        for x in range(n):
            a = D[x, y]
            for z in range(n):
                b = D[y, z]
                if ultra:
                    bound = a if a > b else b
                else:
                    bound = a + b
                if D[x, z] > bound * (1.0 + rtol):
                    return int(x), int(y), int(z)
    return None


def greedy_separated(const double[:, ::1] D, const cnp.intp_t[::1] order, double eps):
    cdef Py_ssize_t m = order.shape[0]
    cdef cnp.intp_t[::1] chosen = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t k = 0, i, j
    cdef cnp.intp_t c
    cdef bint ok
    for i in range(m):
        c = order[i]
        ok = True
        for j in range(k):
            if D[c, chosen[j]] <= eps:
                ok = False
                break
        if ok:
            chosen[k] = c
            k += 1
    return np.asarray(chosen[:k]).copy()


def clique_cover_count(const double[:, ::1] D, const cnp.intp_t[::1] order, double eps):
    cdef Py_ssize_t m = order.shape[0]
    cdef cnp.uint8_t[::1] covered = np.zeros(m, dtype=np.uint8)
    cdef cnp.intp_t[::1] members = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t count = 0, seed = 0, u, j, size
    cdef cnp.intp_t pu
    cdef bint ok
    while True:
        while seed < m and covered[seed]:
            seed += 1
        if seed >= m:
            return count
        count += 1
        covered[seed] = 1
        members[0] = order[seed]
        size = 1
        for u in range(seed + 1, m):
            if covered[u]:
                continue
            pu = order[u]
            ok = True
            for j in range(size):
                if D[pu, members[j]] > eps:
                    ok = False
                    break
            if ok:
                covered[u] = 1
                members[size] = pu
                size += 1


cdef struct MCQ:
    int n
    int W
    uint64_t* nbr
    uint64_t* pbuf
    int* obuf
    int* cbuf
    uint64_t* ubuf
    uint64_t* qbuf
    int* cur
    int cur_len
    int* best
    int best_len


cdef int _color_sort(MCQ* m, int depth) nogil:
    cdef int W = m.W
    cdef uint64_t* P = m.pbuf + depth * W
    cdef uint64_t* U = m.ubuf
    cdef uint64_t* Q = m.qbuf
    cdef int* order = m.obuf + depth * m.n
    cdef int* colors = m.cbuf + depth * m.n
    cdef int cnt = 0, k = 0, w, j, b, v
    cdef bint any_left
    memcpy(U, P, W * sizeof(uint64_t))
    while True:
        any_left = False
        for w in range(W):
            if U[w]:
                any_left = True
                break
        if not any_left:
            return cnt
        k += 1
        memcpy(Q, U, W * sizeof(uint64_t))
        for w in range(W):
            while Q[w]:
                b = __builtin_ctzll(Q[w])
                v = w * 64 + b
                U[w] &= ~((<uint64_t>1) << b)
                Q[w] &= ~((<uint64_t>1) << b)
                for j in range(W):
                    Q[j] &= ~m.nbr[v * W + j]
                order[cnt] = v
                colors[cnt] = k
                cnt += 1


cdef void _expand(MCQ* m, int depth) nogil:
    cdef int W = m.W
    cdef uint64_t* P = m.pbuf + depth * W
    cdef uint64_t* NP = m.pbuf + (depth + 1) * W
    cdef int cnt = _color_sort(m, depth)
    cdef int* order = m.obuf + depth * m.n
    cdef int* colors = m.cbuf + depth * m.n
    cdef int i, j, v
    cdef bint nonempty
    for i in range(cnt - 1, -1, -1):
        if m.cur_len + colors[i] <= m.best_len:
            return
        v = order[i]
        m.cur[m.cur_len] = v
        m.cur_len += 1
        nonempty = False
        for j in range(W):
            NP[j] = P[j] & m.nbr[v * W + j]
            if NP[j]:
                nonempty = True
        if nonempty:
            _expand(m, depth + 1)
        elif m.cur_len > m.best_len:
            memcpy(m.best, m.cur, m.cur_len * sizeof(int))
            m.best_len = m.cur_len
        m.cur_len -= 1
        P[v >> 6] &= ~((<uint64_t>1) << (v & 63))


def max_independent_set(conflict):
    conflict = np.asarray(conflict, dtype=bool)
    cdef int n = conflict.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    comp_arr = ~conflict
    np.fill_diagonal(comp_arr, False)
    deg = comp_arr.sum(axis=1)
    perm = np.argsort(-deg, kind="stable")
    comp_arr = np.ascontiguousarray(comp_arr[np.ix_(perm, perm)], dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] comp = comp_arr
    cdef MCQ m
    cdef int W = (n + 63) // 64
    cdef int i, j
    m.n = n
    m.W = W
    m.nbr = <uint64_t*> calloc(n * W, sizeof(uint64_t))
    m.pbuf = <uint64_t*> calloc((n + 2) * W, sizeof(uint64_t))
    m.obuf = <int*> malloc((n + 2) * n * sizeof(int))
    m.cbuf = <int*> malloc((n + 2) * n * sizeof(int))
    m.ubuf = <uint64_t*> malloc(W * sizeof(uint64_t))
    m.qbuf = <uint64_t*> malloc(W * sizeof(uint64_t))
    m.cur = <int*> malloc(n * sizeof(int))
    m.best = <int*> malloc(n * sizeof(int))
    m.cur_len = 0
    m.best_len = 0
    if (m.nbr == NULL or m.pbuf == NULL or m.obuf == NULL or m.cbuf == NULL
            or m.ubuf == NULL or m.qbuf == NULL or m.cur == NULL or m.best == NULL):
        free(m.nbr); free(m.pbuf); free(m.obuf); free(m.cbuf)
        free(m.ubuf); free(m.qbuf); free(m.cur); free(m.best)
        raise MemoryError()
    try:
        for i in range(n):
            for j in range(n):
                if comp[i, j]:
                    m.nbr[i * W + (j >> 6)] |= (<uint64_t>1) << (j & 63)
            m.pbuf[i >> 6] |= (<uint64_t>1) << (i & 63)
        with nogil:
            _expand(&m, 0)
        best = np.array([m.best[i] for i in range(m.best_len)], dtype=np.intp)
    finally:
        free(m.nbr); free(m.pbuf); free(m.obuf); free(m.cbuf)
        free(m.ubuf); free(m.qbuf); free(m.cur); free(m.best)
    return np.sort(perm[best])


def prefix_diameters(const double[:, ::1] D, const cnp.intp_t[::1] order):
    cdef Py_ssize_t m = order.shape[0], k, j
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double cur = 0.0, d
    cdef cnp.intp_t pk
    for k in range(m):
        pk = order[k]
        for j in range(k):
            d = D[pk, order[j]]
            if d > cur:
                cur = d
        out[k] = cur
    return out_arr


def audit_slope(const double[:, ::1] logp, const double[:, ::1] D):
    cdef Py_ssize_t n = logp.shape[0], m = logp.shape[1]
    cdef Py_ssize_t x, xp, y, ybest
    cdef double mx, diff, slope
    cdef double best = -1.0 / 0.0
    cdef Py_ssize_t bx = -1, bxp = -1, by = -1
    if n < 2:
        return 0.0, -1, -1, -1
    for x in range(n):
        for xp in range(n):
            if xp == x:
                continue
            mx = logp[x, 0] - logp[xp, 0]
            ybest = 0
            for y in range(1, m):
                diff = logp[x, y] - logp[xp, y]
                if diff > mx:
                    mx = diff
                    ybest = y
            slope = mx / D[x, xp]
            if slope > best:
                best = slope
                bx = x
                bxp = xp
                by = ybest
    return float(best), int(bx), int(bxp), int(by)
