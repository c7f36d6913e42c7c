"""Private mechanisms with explicit output distributions, and their audits.

A mechanism stores, for every input point, unnormalised log-probabilities
over a finite output net.  Normalisation is always done in the log domain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from mplab import kernels, rng
from mplab.errors import DomainError
from mplab.metric import FiniteBimetricSpace
from mplab.packing import DEFAULT_CAP, greedy_maximal_separated, max_separated
from mplab.scales import diametric_scale, entropic_scale, fits

KINDS = ("exponential", "ultrametric_relaxed", "constant", "rounding")

#: relative slack of the privacy audit
AUDIT_RTOL = 1e-9

#: tail constant of the relaxed-accuracy bound, 2 / (1 - e^{-1/6})
TAIL_CONSTANT = 2.0 / (1.0 - math.exp(-1.0 / 6.0))


@dataclass(frozen=True, eq=False)
class Mechanism:
    kind: str
    alpha: float
    net: tuple
    log_weights: np.ndarray
    net_s: float | None = None
    relax_s: float | None = None
    fixed_output: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown mechanism kind {self.kind!r}")
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if not self.net:
            raise DomainError("mechanism net is empty")
        lw = np.array(self.log_weights, dtype=np.float64)
        if lw.ndim != 2 or lw.shape[1] != len(self.net):
            raise DomainError("log_weights must be (inputs, len(net))")
        if not np.all(np.isfinite(lw.max(axis=1))):
            raise DomainError("every input needs a finite log-weight")
        lw.setflags(write=False)
        object.__setattr__(self, "net", tuple(int(y) for y in self.net))
        object.__setattr__(self, "log_weights", lw)
        lp = lw - logsumexp(lw, axis=1, keepdims=True)
        lp.setflags(write=False)
        object.__setattr__(self, "_log_probs", lp)

    @property
    def log_probs(self) -> np.ndarray:
        return self._log_probs

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self._log_probs)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha if math.isfinite(self.alpha) else None, "net": list(self.net), "net_s": self.net_s,
                "relax_s": self.relax_s, "fixed_output": self.fixed_output}


def _net(space, s, metric=2):
    net = greedy_maximal_separated(space, metric, None, s).points
    if len(net) == 1 and space.n > 1:
        warnings.warn(f"net scale {s} collapses the net to a single point", stacklevel=3)
    return net


def build_exponential(space: FiniteBimetricSpace, alpha: float, net_s: float | None = None,
                      cap: int = DEFAULT_CAP) -> Mechanism:
    """Output a net point y with probability proportional to exp(-alpha rho1(x, y) / 2).

    The net is the ascending-id greedy maximal ``net_s``-separated set in
    rho2; ``net_s`` defaults to the entropic scale at ``alpha / 3``.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if not space.same_metric:
        warnings.warn("exponential mechanism on two different metrics: weights use rho1", stacklevel=2)
    if net_s is None:
        net_s = entropic_scale(space, alpha / 3, cap).value
    net = _net(space, net_s)
    lw = -alpha * space.rho1[:, list(net)] / 2
    return Mechanism("exponential", float(alpha), net, lw, net_s=float(net_s))


def relaxed_distance(space: FiniteBimetricSpace, relax_s: float, targets=None) -> np.ndarray:
    """sigma[x, j] = min rho1(x, v) over v in the closed rho2-ball B2(targets[j], relax_s)."""
    targets = np.arange(space.n) if targets is None else np.asarray(targets, dtype=np.intp)
    D1, D2 = space.rho1, space.rho2
    out = np.empty((space.n, targets.size))
    memo = {}
    for j, y in enumerate(targets):
        mask = D2[y] <= relax_s
        key = np.packbits(mask).tobytes()
        col = memo.get(key)
        if col is None:
            col = D1[:, mask].min(axis=1)
            memo[key] = col
        out[:, j] = col
    return out


def build_ultrametric_relaxed(space: FiniteBimetricSpace, alpha: float, relax_s: float | None = None,
                              cap: int = DEFAULT_CAP) -> Mechanism:
    """Exponential mechanism on the relaxed distance sigma (rho2 must be an ultrametric)."""
    if not space.ultrametric2:
        raise DomainError("relaxed ultrametric mechanism needs ultrametric2 = true")
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if relax_s is None:
        relax_s = entropic_scale(space, alpha / 3, cap).value
    net = _net(space, relax_s)
    sigma = relaxed_distance(space, relax_s, net)
    # the covering property puts some net point within relax_s of x, so sigma = 0 there
    if np.any(sigma.min(axis=1) != 0.0):
        raise AssertionError("normaliser below 1: net does not cover the space")
    return Mechanism("ultrametric_relaxed", float(alpha), net, -alpha * sigma / 2, relax_s=float(relax_s))


def build_constant(space: FiniteBimetricSpace, y0: int, alpha: float = math.inf) -> Mechanism:
    """Always output ``y0``; private at every level, so ``alpha`` is only a label."""
    if not 0 <= int(y0) < space.n:
        raise DomainError(f"point {y0} out of range")
    return Mechanism("constant", float(alpha), (int(y0),), np.zeros((space.n, 1)), fixed_output=int(y0))


def build_nearest_rounding(space: FiniteBimetricSpace, net_s: float, alpha: float = 1.0,
                           floor: float = 1e-12) -> Mechanism:
    """Round to the nearest net point (rho2, lowest id on ties) with a probability floor.

    ``alpha`` is the level the mechanism falsely claims.  Its true slope is
    about ln(1/floor) / rho1, so the audit fails unless the net is a single point.
    """
    net = list(greedy_maximal_separated(space, 2, None, net_s).points)
    m = len(net)
    near = space.rho2[:, net].argmin(axis=1)
    p = np.full((space.n, m), floor)
    p[np.arange(space.n), near] = 1.0 - floor * (m - 1)
    return Mechanism("rounding", float(alpha), tuple(net), np.log(p), net_s=float(net_s))


@dataclass(frozen=True)
class OutputDistribution:
    input: int
    support: tuple

    def to_dict(self):
        return {"input": self.input, "support": [[y, p] for y, p in self.support]}


def output_distribution(mech: Mechanism, x: int) -> OutputDistribution:
    p = np.exp(mech.log_probs[int(x)])
    return OutputDistribution(int(x), tuple((y, float(q)) for y, q in zip(mech.net, p)))


def _cdf(mech, x):
    c = np.cumsum(np.exp(mech.log_probs[x]))
    return c / c[-1]


def sample(mech: Mechanism, x: int, seed: int) -> int:
    """Inverse-CDF draw using double 0 of stream ``(seed, x)`` (see :mod:`mplab.rng`)."""
    u = rng.uniforms(seed, x, 1)
    j = min(int(np.searchsorted(_cdf(mech, x), u[0], side="right")), len(mech.net) - 1)
    return mech.net[j]


@dataclass(frozen=True)
class PrivacyAudit:
    alpha_claimed: float
    max_slope: float
    witness: tuple
    passed: bool

    def to_dict(self):
        a = self.alpha_claimed
        return {"alpha_claimed": a if math.isfinite(a) else None, "max_slope": self.max_slope,
                "witness": list(self.witness), "pass": self.passed}


def audit_privacy(mech: Mechanism, space: FiniteBimetricSpace, alpha: float | None = None) -> PrivacyAudit:
    """Worst log-ratio slope over ordered input pairs and net atoms.

    For a finite output set the ratio of any event is a ratio of atom sums, so
    the atoms bound every event.  Passes iff the slope is at most
    ``alpha * (1 + 1e-9)``; ``alpha`` defaults to the mechanism's own.
    """
    alpha = mech.alpha if alpha is None else alpha
    if mech.log_probs.shape[0] != space.n:
        raise DomainError("mechanism and space disagree on the number of inputs")
    slope, x, xp, j = kernels.audit_slope(mech.log_probs, space.rho1)
    slope = max(slope, 0.0) + 0.0 if space.n > 1 else 0.0
    witness = (x, xp, mech.net[j]) if j >= 0 else ()
    return PrivacyAudit(float(alpha), float(slope), witness, bool(slope <= alpha * (1 + AUDIT_RTOL)))


@dataclass(frozen=True)
class AccuracyResult:
    per_input: np.ndarray
    sup_error: float
    sup_input: int
    mc_mean: np.ndarray | None = None
    mc_stderr: np.ndarray | None = None
    trials: int = 0

    @property
    def stderr_defined(self) -> bool:
        return self.trials >= 2

    @property
    def mc_sup(self):
        """Largest per-input Monte-Carlo mean and its standard error."""
        if self.mc_mean is None:
            return None, None
        j = int(self.mc_mean.argmax())
        return float(self.mc_mean[j]), float(self.mc_stderr[j])

    def to_dict(self):
        d = {"sup_error": self.sup_error, "sup_input": self.sup_input, "per_input": self.per_input.tolist()}
        if self.mc_mean is not None:
            d.update(trials=self.trials, mc_mean=self.mc_mean.tolist(),
                     mc_stderr=[None if math.isnan(v) else v for v in self.mc_stderr.tolist()])
        return d


def exact_accuracy(mech: Mechanism, space: FiniteBimetricSpace) -> AccuracyResult:
    """E rho2(M(x), x) for every input x, and its supremum."""
    err = (np.exp(mech.log_probs) * space.rho2[:, list(mech.net)]).sum(axis=1)
    j = int(err.argmax())
    return AccuracyResult(err, float(err[j]), j)


def accuracy_mc(mech: Mechanism, space: FiniteBimetricSpace, trials: int, seed: int) -> AccuracyResult:
    """Monte-Carlo estimate of every per-input error alongside the exact values.

    Trial ``t`` for input ``x`` uses double ``t`` of stream ``(seed, x)``, so
    trial 0 reproduces :func:`sample`.  With one trial the standard error is
    NaN and ``stderr_defined`` is False.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    exact = exact_accuracy(mech, space)
    net = np.asarray(mech.net)
    means = np.empty(space.n)
    ses = np.empty(space.n)
    for x in range(space.n):
        u = rng.uniforms(seed, x, trials)
        j = np.minimum(np.searchsorted(_cdf(mech, x), u, side="right"), net.size - 1)
        e = space.rho2[x, net[j]]
        means[x] = e.mean()
        ses[x] = e.std(ddof=1) / math.sqrt(trials) if trials > 1 else math.nan
    return AccuracyResult(exact.per_input, exact.sup_error, exact.sup_input, means, ses, trials)


def exponential_upper_bound(alpha: float, net_s: float, c_s: float = 34.0, c_inv: float = 40.0) -> float:
    """6 s + e^{-alpha s / 2} (c_s s + c_inv / alpha) for the exponential mechanism."""
    return 6 * net_s + math.exp(-alpha * net_s / 2) * (c_s * net_s + c_inv / alpha)


def series_constants(terms: int = 2000) -> dict:
    """Numerical values of the geometric series behind the exponential upper bound.

    ``with_sqrt_e`` keeps the factor e^{1/2} that the tail estimate carries.
    """
    k = np.arange(1, terms + 1, dtype=float)
    g = float(np.exp(-k / 6).sum())
    h = float((k * np.exp(-k / 6)).sum())
    return {"sum_exp": g, "sum_k_exp": h, "c_s": 6 * g, "c_inv": h,
            "c_s_with_sqrt_e": 6 * g * math.exp(0.5), "c_inv_with_sqrt_e": h * math.exp(0.5)}


@dataclass
class LemmaCheck:
    name: str
    ok: bool
    worst: float
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "ok": self.ok, "worst": self.worst, "detail": self.detail}


@dataclass
class LemmaReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_dict(self):
        return {"ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


def verify_relaxed_lemmas(space: FiniteBimetricSpace, mech: Mechanism, cap: int = DEFAULT_CAP,
                          tol: float = 1e-12) -> LemmaReport:
    """Exhaustive checks of the relaxed mechanism's supporting lemmas.

    * sigma is 1-Lipschitz in rho1 in its first argument;
    * the normaliser is at least 1 for every input;
    * relaxed ball: #{y in net : sigma(x, y) < r} <= N2(B1(x, r), s) and,
      when s is at least the entropic scale at alpha/3, <= e^{alpha r / 3};
    * relaxed accuracy: Pr{sigma(x, M(x)) >= r} <= C e^{-alpha r / 6};
    * unrelaxation: rho2(x, y) <= s + e^{alpha sigma(x, y) / 7} s_diam(alpha/7).

    Each statement quantifies over all r > 0; both sides are step functions
    with breaks at distances from x, so checking each break (and the
    interval just after it) is exhaustive.
    """
    if mech.kind != "ultrametric_relaxed":
        raise DomainError("lemma checks apply to the relaxed ultrametric mechanism")
    alpha, s = mech.alpha, mech.relax_s
    D1, D2 = space.rho1, space.rho2
    net = np.asarray(mech.net)
    sig_net = relaxed_distance(space, s, net)
    sig_all = relaxed_distance(space, s)
    rep = LemmaReport()

    # sigma(x', y) <= sigma(x, y) + rho1(x, x'), all x, x', y
    worst = 0.0
    for x in range(space.n):
        gap = sig_all - sig_all[x][None, :] - D1[x][:, None]
        worst = max(worst, float(gap.max()))
    rep.checks.append(LemmaCheck("sigma_lipschitz", worst <= tol, worst))

    lse = logsumexp(mech.log_weights, axis=1)
    rep.checks.append(LemmaCheck("normaliser_at_least_one", bool(lse.min() >= -tol), float(lse.min())))

    s_third = entropic_scale(space, alpha / 3, cap).value
    probs = mech.probs
    ball_ok, ent_ok, tail_ok = True, True, True
    ball_worst, tail_worst = -np.inf, -np.inf
    ent_applies = s >= s_third
    for x in range(space.n):
        breaks = np.unique(np.concatenate([[0.0], D1[x]]))
        sx = sig_net[x]
        for p in breaks:
            left = int(np.count_nonzero(sx <= p))
            right = max_separated(D2, np.flatnonzero(D1[x] <= p), s, cap)[0]
            ball_worst = max(ball_worst, left - right)
            if left > right:
                ball_ok = False
            if ent_applies and not fits(right, alpha * p / 3):
                ent_ok = False
        for v in np.unique(sx[sx > 0]):
            tail = float(probs[x][sx >= v].sum())
            bound = TAIL_CONSTANT * math.exp(-alpha * v / 6)
            tail_worst = max(tail_worst, tail / bound)
            if tail > bound * (1 + tol):
                tail_ok = False
    rep.checks.append(LemmaCheck("relaxed_ball", ball_ok, float(ball_worst)))
    rep.checks.append(LemmaCheck("relaxed_ball_entropic", ent_ok, 0.0,
                                 {"applicable": ent_applies, "entropic_alpha_third": s_third}))
    rep.checks.append(LemmaCheck("relaxed_accuracy_tail", tail_ok, float(max(tail_worst, 0.0)),
                                 {"C": TAIL_CONSTANT}))

    s_circ = diametric_scale(space, alpha / 7).value
    bound = s + np.exp(alpha * sig_all / 7) * s_circ
    ratio = D2 - bound
    rep.checks.append(LemmaCheck("unrelaxation", bool(np.all(D2 <= bound * (1 + tol) + tol)),
                                 float(ratio.max()), {"diametric_alpha_seventh": s_circ}))
    return rep
