"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same tie-breaking, so the two backends return identical
results.  ``mplab.kernels`` picks one at import time.
"""

import numpy as np


def triangle_witness(D, ultra, rtol):
    """Return ``(x, y, z)`` with ``D[x, z]`` above the (max-)triangle bound, or None."""
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    for y in range(n):
        col = D[:, y][:, None]
        row = D[y, :][None, :]
        bound = np.maximum(col, row) if ultra else col + row
        bad = D > bound * (1.0 + rtol)
        if bad.any():
            x, z = np.argwhere(bad)[0]
            return int(x), int(y), int(z)
    return None


def greedy_separated(D, order, eps):
    """Scan ``order`` and keep each point farther than ``eps`` from all kept points."""
    order = np.asarray(order, dtype=np.intp)
    alive = np.ones(order.size, dtype=bool)
    chosen = []
    pos = 0
    while pos < order.size:
        if not alive[pos]:
            nxt = np.flatnonzero(alive[pos:])
            if nxt.size == 0:
                break
            pos += int(nxt[0])
        c = order[pos]
        chosen.append(c)
        alive &= D[c, order] > eps
        pos += 1
    return np.asarray(chosen, dtype=np.intp)


def clique_cover_count(D, order, eps):
    """Size of a greedy partition of ``order`` into sets of diameter <= eps.

    Each part holds at most one point of any eps-separated set, so the count
    is an upper bound on the packing number.
    """
    order = np.asarray(order, dtype=np.intp)
    m = order.size
    uncovered = np.ones(m, dtype=bool)
    count = 0
    while True:
        left = np.flatnonzero(uncovered)
        if left.size == 0:
            return count
        count += 1
        seed = left[0]
        cand = uncovered & (D[order[seed], order] <= eps)
        while True:
            nxt = np.flatnonzero(cand)
            if nxt.size == 0:
                break
            u = nxt[0]
            uncovered[u] = False
            cand[u] = False
            cand &= D[order[u], order] <= eps


def _color_sort(P, nbr):
    order = []
    colors = []
    k = 0
    U = P
    while U:
        k += 1
        Q = U
        while Q:
            v = (Q & -Q).bit_length() - 1
            bit = 1 << v
            U &= ~bit
            Q &= ~bit
            Q &= ~nbr[v]
            order.append(v)
            colors.append(k)
    return order, colors


def max_independent_set(conflict):
    """Exact maximum independent set of a conflict graph (boolean matrix).

    Solved as a maximum clique of the complement with greedy-colouring bounds;
    vertices are relabelled by non-increasing complement degree.  Returns the
    local indices of one optimal set, ascending.
    """
    conflict = np.asarray(conflict, dtype=bool)
    n = conflict.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    comp = ~conflict
    np.fill_diagonal(comp, False)
    deg = comp.sum(axis=1)
    perm = np.argsort(-deg, kind="stable")
    comp = comp[np.ix_(perm, perm)]
    nbr = []
    for i in range(n):
        bits = 0
        for j in np.flatnonzero(comp[i]):
            bits |= 1 << int(j)
        nbr.append(bits)

    best = []
    cur = []

    def expand(P):
        nonlocal best
        order, colors = _color_sort(P, nbr)
        for i in range(len(order) - 1, -1, -1):
            if len(cur) + colors[i] <= len(best):
                return
            v = order[i]
            cur.append(v)
            NP = P & nbr[v]
            if NP:
                expand(NP)
            elif len(cur) > len(best):
                best = list(cur)
            cur.pop()
            P &= ~(1 << v)

    expand((1 << n) - 1)
    return np.sort(perm[np.asarray(best, dtype=np.intp)])


def prefix_diameters(D, order):
    """``out[k]`` is the diameter of ``{order[0], ..., order[k]}``."""
    order = np.asarray(order, dtype=np.intp)
    if order.size == 0:
        return np.zeros(0)
    sub = np.tril(D[np.ix_(order, order)], k=-1)
    return np.maximum.accumulate(sub.max(axis=1))


def audit_slope(logp, D):
    """Max over x != x', y of ``(logp[x, y] - logp[x', y]) / D[x, x']``.

    Returns ``(slope, x, x', y)``; ``(0.0, -1, -1, -1)`` for a single input.
    """
    logp = np.asarray(logp, dtype=np.float64)
    n = logp.shape[0]
    best = (-np.inf, -1, -1, -1)
    if n < 2:
        return 0.0, -1, -1, -1
    for x in range(n):
        diff = logp[x][None, :] - logp
        ys = diff.argmax(axis=1)
        mx = diff[np.arange(n), ys]
        with np.errstate(divide="ignore", invalid="ignore"):
            slopes = mx / D[x]
        slopes[x] = -np.inf
        xp = int(slopes.argmax())
        if slopes[xp] > best[0]:
            best = (float(slopes[xp]), x, xp, int(ys[xp]))
    return best
