"""Separated sets, packing numbers and the packing facts they obey.

A set is eps-separated when all pairwise distances are *strictly* greater
than eps, so the packing number N(B, eps) at eps = 0 is |B|.  Exact packing
numbers are maximum independent sets of the conflict graph
``{(u, v) : rho(u, v) <= eps}``.  Before any branching the solver tries the
cheap certificate ``greedy lower bound == greedy clique-cover upper bound``;
only the remaining connected components that are not cliques go to the
branch-and-bound kernel, and those are subject to ``cap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from mplab import kernels
from mplab.errors import CapExceeded, DomainError
from mplab.metric import FiniteBimetricSpace, spectrum_values

DEFAULT_CAP = 40


@dataclass(frozen=True)
class SeparatedSet:
    points: tuple
    epsilon: float
    metric: int
    maximal: bool

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class PackingResult:
    count: int
    witness: SeparatedSet
    exact: bool


def subset_indices(space: FiniteBimetricSpace, subset) -> np.ndarray:
    """Ascending unique point ids; ``None`` means the whole space."""
    if subset is None:
        return np.arange(space.n, dtype=np.intp)
    if isinstance(subset, (set, frozenset)):
        subset = sorted(subset)
    idx = np.unique(np.asarray(subset, dtype=np.intp))
    if idx.size == 0:
        raise DomainError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= space.n:
        raise DomainError("subset contains an id outside the space")
    return idx


def is_separated(D, pts, eps) -> bool:
    pts = np.asarray(pts, dtype=np.intp)
    if pts.size < 2:
        return True
    sub = D[np.ix_(pts, pts)]
    off = ~np.eye(pts.size, dtype=bool)
    return bool(np.all(sub[off] > eps))


def covers(D, centers, subset, eps) -> bool:
    """Every point of ``subset`` lies within eps of some center."""
    centers = np.asarray(centers, dtype=np.intp)
    if centers.size == 0:
        return len(subset) == 0
    return bool(np.all(D[np.ix_(np.asarray(subset, dtype=np.intp), centers)].min(axis=1) <= eps))


def greedy_maximal_separated(space, metric, subset=None, epsilon=0.0, order=None) -> SeparatedSet:
    """Maximal eps-separated subset built by scanning ``order``.

    The default order is ascending point id.  The result is checked to be an
    eps-cover of the subset before it is returned.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    D = space.rho(metric)
    idx = subset_indices(space, subset)
    if order is None:
        order = idx
    else:
        order = np.asarray(order, dtype=np.intp)
        if order.size != idx.size or not np.array_equal(np.sort(order), idx):
            raise DomainError("order must be a permutation of the subset")
    chosen = kernels.greedy_separated(D, order, epsilon)
    if not covers(D, chosen, idx, epsilon):
        raise AssertionError("maximal separated set failed to cover its subset")
    return SeparatedSet(tuple(int(c) for c in np.sort(chosen)), float(epsilon), metric, True)


def covering_witness(space, metric, subset=None, epsilon=0.0) -> tuple:
    """Centers of an eps-cover of ``subset`` that are themselves eps-separated."""
    return greedy_maximal_separated(space, metric, subset, epsilon).points


def _component_mis(D, comp, eps, cap, conflict):
    k = comp.size
    if k == 1:
        return comp
    sub = conflict[np.ix_(comp, comp)]
    if sub.sum() == k * k:
        return comp[:1]
    lb = kernels.greedy_separated(D, comp, eps)
    if lb.size == kernels.clique_cover_count(D, comp, eps):
        return lb
    if k > cap:
        raise CapExceeded(f"conflict component of {k} points exceeds cap {cap}", size=k, cap=cap)
    return comp[kernels.max_independent_set(sub)]


def max_separated(D, idx, eps, cap=DEFAULT_CAP):
    """Exact maximum eps-separated subset of ``idx`` under matrix ``D``.

    Returns ``(count, witness)`` with the witness as ascending ids.
    """
    idx = np.asarray(idx, dtype=np.intp)
    m = idx.size
    if m <= 1:
        return m, idx
    lb = kernels.greedy_separated(D, idx, eps)
    if lb.size == m or lb.size == kernels.clique_cover_count(D, idx, eps):
        return int(lb.size), np.sort(lb)
    Dsub = np.ascontiguousarray(D[np.ix_(idx, idx)])
    conflict = Dsub <= eps
    ncomp, labels = connected_components(conflict, directed=False)
    parts = []
    for c in range(ncomp):
        local = np.flatnonzero(labels == c)
        parts.append(idx[_component_mis(Dsub, local, eps, cap, conflict)])
    witness = np.sort(np.concatenate(parts))
    return int(witness.size), witness


def packing_number(space, metric, subset=None, epsilon=0.0, mode="exact", cap=DEFAULT_CAP) -> PackingResult:
    """N(subset, epsilon) in metric ``metric``.

    ``mode="exact"`` proves optimality (raising :class:`CapExceeded` when a
    non-trivial conflict component is larger than ``cap``); ``mode="greedy"``
    returns the greedy lower bound flagged ``exact=False``.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    D = space.rho(metric)
    idx = subset_indices(space, subset)
    if mode == "greedy":
        w = greedy_maximal_separated(space, metric, idx, epsilon)
        return PackingResult(len(w), w, False)
    if mode != "exact":
        raise DomainError(f"unknown packing mode {mode!r}")
    count, witness = max_separated(D, idx, epsilon, cap)
    if not is_separated(D, witness, epsilon):
        raise AssertionError("packing witness is not separated")
    maximal = covers(D, witness, idx, epsilon)
    w = SeparatedSet(tuple(int(p) for p in witness), float(epsilon), metric, maximal)
    return PackingResult(count, w, True)


@dataclass
class FactCheck:
    fact: str
    params: dict
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs

    def to_dict(self):
        return {"fact": self.fact, "params": self.params, "lhs": self.lhs, "rhs": self.rhs, "ok": self.ok}


@dataclass
class FactReport:
    checks: list = field(default_factory=list)

    @property
    def violations(self):
        return [c for c in self.checks if not c.ok]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"ok": self.ok, "n_checks": len(self.checks),
                "violations": [c.to_dict() for c in self.violations]}


def _balls(D, R):
    return [np.flatnonzero(D[x] <= R) for x in range(D.shape[0])]


def _sample_scale(rng, spec):
    # half the draws hit a spectrum value exactly, where strictness matters
    if rng.random() < 0.5:
        return float(rng.choice(spec))
    return float(rng.uniform(0.0, spec[-1]) or spec[0])


def verify_packing_facts(space, metric=1, samples=30, seed=0, cap=DEFAULT_CAP) -> FactReport:
    """Check the covering, chain-rule and iterated chain-rule facts on samples.

    Each family gets ``samples`` random instances drawn with ``seed``.  Every
    check is recorded; any violation means a packing bug.
    """
    D = space.rho(metric)
    n = space.n
    report = FactReport()
    spec = spectrum_values(D)
    if spec.size == 0:
        report.checks.append(FactCheck("trivial_single_point", {}, 1, 1))
        return report
    rng = np.random.default_rng(seed)

    def N(idx, eps):
        return max_separated(D, idx, eps, cap)[0]

    for _ in range(samples):
        x = int(rng.integers(n))
        B = np.flatnonzero(D[x] <= _sample_scale(rng, spec))
        eps = _sample_scale(rng, spec)
        net = kernels.greedy_separated(D, B, eps)
        bad = int(not (is_separated(D, net, eps) and covers(D, net, B, eps)))
        report.checks.append(FactCheck("packing_implies_covering",
                                       {"center": x, "size": int(B.size), "eps": eps}, bad, 0))

    for _ in range(samples):
        if rng.random() < 0.25:
            B = np.arange(n)
        else:
            x = int(rng.integers(n))
            B = np.flatnonzero(D[x] <= _sample_scale(rng, spec))
        r = _sample_scale(rng, spec)
        s = _sample_scale(rng, spec)
        lhs = N(B, s)
        worst = max(N(np.flatnonzero(D[a] <= r), s) for a in B)
        report.checks.append(FactCheck("chain_rule", {"size": int(B.size), "r": r, "s": s},
                                       lhs, N(B, r) * worst))

    for _ in range(samples):
        s = _sample_scale(rng, spec)
        k0 = int(rng.integers(1, max(2, math.ceil(math.log2(spec[-1] / s)) + 2)))
        lhs = max(N(b, s) for b in _balls(D, s * 2 ** k0))
        rhs = 1
        for k in range(1, k0 + 1):
            rhs *= max(N(b, s * 2 ** (k - 1)) for b in _balls(D, s * 2 ** k))
        report.checks.append(FactCheck("chain_rule_many_terms", {"s": s, "k0": k0}, lhs, rhs))
    return report
