"""Entropic, diametric, doubling and outer scales of finite spaces.

All four are computed exactly from the piecewise-constant structure of the
finite space:

* a closed rho1-ball around ``x`` only changes at the distances from ``x``,
  and inside a constancy interval the smallest radius binds, so radii range
  over those distances;
* N2(B, s) only changes at rho2 distances and is right-continuous there
  (pairs at exactly ``s`` conflict), so the infimum over s > 0 is attained
  at ``0`` (meaning s -> 0+, where N2(B, s) = |B|) or at a rho2 distance.

``N <= e^{a r}`` is always compared as ``ln N <= a r`` with a relative slack
of ``LOG_RTOL``.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from mplab import kernels
from mplab.errors import CapExceeded, DomainError
from mplab.metric import FiniteBimetricSpace
from mplab.packing import DEFAULT_CAP, max_separated
from mplab.metric import spectrum_values

LOG_RTOL = 1e-12
REL_TOL = 1e-12


def fits(count: int, log_bound: float) -> bool:
    """``count <= exp(log_bound)`` evaluated in the log domain."""
    return count <= 1 or math.log(count) <= log_bound + LOG_RTOL * abs(log_bound)


def _check_alpha(alpha):
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be positive and finite, got {alpha!r}")


def _need_same(space, what):
    if not space.same_metric:
        raise DomainError(f"{what} is defined for a single metric (rho1 == rho2)")


class _SpaceCache:
    """Per-space memo of distinct rho1-balls and of exact rho2 packing counts."""

    def __init__(self, space):
        D1 = space.rho1
        n = space.n
        seen = {}
        for x in range(n):
            row = D1[x]
            srt = np.sort(row)
            radii = np.unique(srt[srt > 0])
            counts = np.searchsorted(srt, radii, side="right")
            for r, c in zip(radii, counts):
                key = np.packbits(row <= r).tobytes()
                prev = seen.get(key)
                if prev is None or r < prev[0]:
                    seen[key] = (float(r), x, int(c))
        self.balls = [(r, x, c, key) for key, (r, x, c) in seen.items()]
        self.r = np.array([b[0] for b in self.balls])
        self.logsize = np.log(np.array([b[2] for b in self.balls], dtype=float)) if self.balls else np.zeros(0)
        self.counts = {}
        self.s_cands = np.concatenate([[0.0], spectrum_values(space.rho2)])


_CACHE: "weakref.WeakKeyDictionary[FiniteBimetricSpace, _SpaceCache]" = weakref.WeakKeyDictionary()


def _cache(space) -> _SpaceCache:
    c = _CACHE.get(space)
    if c is None:
        c = _SpaceCache(space)
        _CACHE[space] = c
    return c


def _count(space, cache, ball, s, cap):
    r, x, _, key = ball
    memo = cache.counts.get((key, s))
    if memo is None:
        members = np.flatnonzero(space.rho1[x] <= r)
        try:
            memo = max_separated(space.rho2, members, s, cap)[0]
        except CapExceeded as err:
            raise err.with_context(center=x, r=r, s=s) from None
        cache.counts[(key, s)] = memo
    return memo


def _ball_fits(space, cache, ball, s, log_bound, cap):
    memo = cache.counts.get((ball[3], s))
    if memo is not None:
        return fits(memo, log_bound)
    members = np.flatnonzero(space.rho1[ball[1]] <= ball[0])
    D2 = space.rho2
    if not fits(kernels.greedy_separated(D2, members, s).size, log_bound):
        return False
    if fits(kernels.clique_cover_count(D2, members, s), log_bound):
        return True
    return fits(_count(space, cache, ball, s, cap), log_bound)


@dataclass(frozen=True)
class Scale:
    """A scale value with the data that pins it."""

    name: str
    alpha: float
    value: float
    witness: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.value
        yield self.witness

    def to_dict(self):
        return {"name": self.name, "alpha": self.alpha, "value": self.value, "witness": self.witness}


def entropic_scale(space: FiniteBimetricSpace, alpha: float, cap: int = DEFAULT_CAP) -> Scale:
    """inf{s > 0 : N2(B1(x, r), s) <= e^{alpha r} for all x, r}.

    Balls are visited in decreasing order of ``ln|B| - alpha r``; each one
    only has to be tested at the current best candidate, and the candidate
    index moves up (by bisection, validity being monotone in s) when a ball
    fails.  The witness names the binding ball and the packing counts at the
    value and at the next smaller candidate.
    """
    _check_alpha(alpha)
    cache = _cache(space)
    cands = cache.s_cands
    if not cache.balls:
        return Scale("entropic", alpha, 0.0, {"binding": None})
    pressure = cache.logsize - alpha * cache.r
    best = 0
    bind = None
    for i in np.argsort(-pressure, kind="stable"):
        if pressure[i] <= LOG_RTOL * abs(alpha * cache.r[i]):
            break
        ball = cache.balls[i]
        logb = alpha * ball[0]
        if _ball_fits(space, cache, ball, cands[best], logb, cap):
            continue
        lo, hi = best + 1, len(cands) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if _ball_fits(space, cache, ball, cands[mid], logb, cap):
                hi = mid
            else:
                lo = mid + 1
        best = lo
        bind = ball
    value = float(cands[best])
    if bind is None:
        return Scale("entropic", alpha, value, {"binding": None})
    r, x = bind[0], bind[1]
    witness = {
        "center": int(x),
        "r": r,
        "ball_size": bind[2],
        "count_at_value": _count(space, cache, bind, cands[best], cap),
        "below": float(cands[best - 1]),
        "count_below": _count(space, cache, bind, cands[best - 1], cap),
        "log_bound": alpha * r,
    }
    return Scale("entropic", alpha, value, witness)


def diametric_scale(space: FiniteBimetricSpace, alpha: float) -> Scale:
    """sup over x and rho1-radii r of diam2(B1(x, r)) * e^{-alpha r}."""
    _check_alpha(alpha)
    D1, D2 = space.rho1, space.rho2
    best, wit = 0.0, {"center": None}
    for x in range(space.n):
        order = np.argsort(D1[x], kind="stable")
        d = D1[x][order]
        diams = kernels.prefix_diameters(D2, order)
        ends = np.flatnonzero(np.r_[d[1:] != d[:-1], True])
        vals = diams[ends] * np.exp(-alpha * d[ends])
        j = int(vals.argmax())
        if vals[j] > best:
            best = float(vals[j])
            wit = {"center": x, "r": float(d[ends[j]]), "diameter": float(diams[ends[j]])}
    return Scale("diametric", alpha, best, wit)


def _max_doubling_count(D, s, cap):
    return max(max_separated(D, np.flatnonzero(D[x] <= 2 * s), s, cap)[0] for x in range(D.shape[0]))


def doubling_scale(space: FiniteBimetricSpace, alpha: float, cap: int = DEFAULT_CAP,
                   stable: bool = False) -> Scale:
    """inf{s > 0 : N(B(x, 2s), s) <= e^{2 alpha s} for all x}.

    The left side is constant on the intervals cut by {d, d/2 : d a distance}
    and the right side increases, so each interval is solved in closed form
    and the first interval with a valid point gives the infimum.  On a finite
    space the first interval (0, d_min/2) has left side 1, so the value is 0.

    With ``stable=True`` the witness also carries ``stable_from``, the
    smallest s beyond which every s is valid; this is the informative number
    on discretisations of continua.
    """
    _check_alpha(alpha)
    _need_same(space, "the doubling scale")
    D = space.rho1
    spec = spectrum_values(D)
    if spec.size == 0:
        return Scale("doubling", alpha, 0.0, {"interval": None})
    crit = np.unique(np.concatenate([spec, spec / 2]))
    starts = np.concatenate([[0.0], crit])
    ends = np.concatenate([crit, [np.inf]])
    value, wit = None, {}
    stable_from = 0.0
    for a, b in zip(starts, ends):
        lhs = 1 if a == 0.0 else _max_doubling_count(D, a, cap)
        t = math.log(lhs) / (2 * alpha)
        lo = max(a, t)
        if value is None and lo < b:
            value = float(lo)
            wit = {"interval": [float(a), float(b)], "lhs": lhs}
            if not stable:
                break
        if t > a:
            stable_from = float(min(b, t))
    if stable:
        wit["stable_from"] = stable_from
    return Scale("doubling", alpha, value, wit)


def outer_scale(space: FiniteBimetricSpace, alpha: float, cap: int = DEFAULT_CAP) -> Scale:
    """min over gamma in {0+} and the distances of gamma + ln N(Z, gamma) / alpha."""
    _check_alpha(alpha)
    _need_same(space, "the outer scale")
    D = space.rho1
    n = space.n
    best = math.log(n) / alpha
    wit = {"gamma": 0.0, "count": n}
    idx = np.arange(n)
    for g in spectrum_values(D):
        if g >= best:
            break
        cnt = max_separated(D, idx, g, cap)[0]
        val = g + math.log(cnt) / alpha
        if val < best:
            best, wit = float(val), {"gamma": float(g), "count": cnt}
    return Scale("outer", alpha, float(best), wit)


@dataclass(frozen=True)
class ScaleReport:
    alpha: float
    entropic: float
    diametric: float
    doubling: float | None
    outer: float | None
    witnesses: dict

    def to_dict(self):
        return {"alpha": self.alpha, "entropic": self.entropic, "diametric": self.diametric,
                "doubling": self.doubling, "outer": self.outer, "witnesses": self.witnesses}


def scale_report(space, alpha, cap=DEFAULT_CAP) -> ScaleReport:
    ent = entropic_scale(space, alpha, cap)
    dia = diametric_scale(space, alpha)
    dbl = out = None
    wits = {"entropic": ent.witness, "diametric": dia.witness}
    if space.same_metric:
        d = doubling_scale(space, alpha, cap)
        o = outer_scale(space, alpha, cap)
        dbl, out = d.value, o.value
        wits.update(doubling=d.witness, outer=o.witness)
    return ScaleReport(alpha, ent.value, dia.value, dbl, out, wits)


def verify_witness(space, scale: Scale, cap=DEFAULT_CAP) -> bool:
    """Recompute the binding constraint recorded in a scale's witness."""
    w = scale.witness
    if scale.name == "entropic":
        if w.get("binding", 0) is None:
            return scale.value == 0.0 or space.n == 1
        members = np.flatnonzero(space.rho1[w["center"]] <= w["r"])
        at = max_separated(space.rho2, members, scale.value, cap)[0]
        below = max_separated(space.rho2, members, w["below"], cap)[0]
        return (at == w["count_at_value"] and below == w["count_below"]
                and fits(at, w["log_bound"]) and not fits(below, w["log_bound"]))
    if scale.name == "diametric":
        if w["center"] is None:
            return scale.value == 0.0
        members = np.flatnonzero(space.rho1[w["center"]] <= w["r"])
        diam = float(space.rho2[np.ix_(members, members)].max())
        return diam == w["diameter"] and diam * math.exp(-scale.alpha * w["r"]) == scale.value
    if scale.name == "outer":
        cnt = space.n if w["gamma"] == 0.0 else max_separated(space.rho1, np.arange(space.n), w["gamma"], cap)[0]
        return cnt == w["count"] and w["gamma"] + math.log(cnt) / scale.alpha == scale.value
    if scale.name == "doubling":
        return w.get("interval") is None or scale.value >= w["interval"][0]
    raise DomainError(f"unknown scale {scale.name!r}")


@dataclass
class RelationCheck:
    name: str
    lhs: float
    rhs: float
    applicable: bool = True
    asserted: bool = True
    detail: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return (not self.applicable) or self.lhs <= self.rhs * (1 + REL_TOL) + 1e-15

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "applicable": self.applicable,
                "asserted": self.asserted, "holds": self.holds, "detail": self.detail}


@dataclass
class RelationReport:
    alpha: float
    checks: list = field(default_factory=list)

    @property
    def failures(self):
        return [c for c in self.checks if c.asserted and not c.holds]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self):
        return {"alpha": self.alpha, "ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


def verify_scale_relations(space, alpha, kappas=(1.0, 1.5, 2.0, 3.0, 4.0), cap=DEFAULT_CAP) -> RelationReport:
    """Check the inter-scale inequalities valid on every metric space.

    Asserted: doubling <= entropic, entropic <= 2 outer, the large-1/alpha
    lower bound, the doubling-condition sandwich for each kappa whose
    hypothesis holds, and entropic(alpha) <= entropic(alpha / 2).  Relations
    that need norm-convexity or connectedness are attached with
    ``asserted=False`` so their ratios can be inspected.
    """
    _check_alpha(alpha)
    rep = RelationReport(alpha)
    s = entropic_scale(space, alpha, cap).value
    rep.checks.append(RelationCheck("entropic_monotone_in_alpha", s, entropic_scale(space, alpha / 2, cap).value))
    if not space.same_metric:
        return rep
    D = space.rho1
    n = space.n
    diam = float(D.max()) if n > 1 else 0.0
    dbl = doubling_scale(space, alpha, cap).value
    out = outer_scale(space, alpha, cap).value
    rep.checks.append(RelationCheck("doubling_le_entropic", dbl, s))
    rep.checks.append(RelationCheck("entropic_le_2outer", s, 2 * out))
    rep.checks.append(RelationCheck("large_inverse_alpha", diam / 2, s,
                                    applicable=1 / alpha >= 2 * diam))
    idx = np.arange(n)

    def N(eps):
        return n if eps == 0 else max_separated(D, idx, eps, cap)[0]

    for k in kappas:
        hyp = N(s) >= N(k * s) ** 2
        rep.checks.append(RelationCheck("doubling_condition_lower", s / 2, out, applicable=hyp, detail={"kappa": k}))
        rep.checks.append(RelationCheck("doubling_condition_upper", out, 2 * k * s, applicable=hyp,
                                        detail={"kappa": k}))
    # reported only: these need norm-convexity or connectedness
    rep.checks.append(RelationCheck("regularity_upper_t_half", entropic_scale(space, alpha / 2, cap).value,
                                    2 * s, asserted=False))
    rep.checks.append(RelationCheck("doubling_ge_quarter_entropic", s / 4, dbl, asserted=False))
    if s > 0:
        rep.checks.append(RelationCheck("outer_le_log_factor", out, 3 * s * (1 + math.log(diam / s)),
                                        asserted=False))
    rep.checks.append(RelationCheck("small_inverse_alpha", 1 / (2 * alpha), s, asserted=False,
                                    applicable=1 / alpha < 2 * diam))
    return rep
