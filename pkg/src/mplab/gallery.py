"""Example spaces with exact oracles.

Discretised continuum spaces (normed balls, Wasserstein space, Lipschitz
functions) use integer or rational coordinates so distances are exact up to
the final float conversion.  Ultrametric cubes are {0,1}^L with distance
f(first differing index), indices starting at 1.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import shortest_path

from mplab.errors import CapExceeded, DomainError
from mplab.metric import FiniteBimetricSpace

DEFAULT_POINT_CAP = 5000
W1_SUPPORT_CAP = 400


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(v).limit_denominator(10**9)


def _check_cap(size, cap, what):
    if size > cap:
        raise CapExceeded(f"{what} has {size} points, cap is {cap}", size=size, cap=cap)


# ---------------------------------------------------------------- simple spaces

def line_space(n: int, step: float = 1.0) -> FiniteBimetricSpace:
    """Points 0, step, ..., (n-1) step on the real line."""
    if n < 1:
        raise DomainError("line needs at least one point")
    x = np.arange(n) * float(step)
    return FiniteBimetricSpace(tuple(range(n)), np.abs(np.subtract.outer(x, x)))


def two_point_space(distance: float = 1.0) -> FiniteBimetricSpace:
    return FiniteBimetricSpace((0, 1), np.array([[0.0, distance], [distance, 0.0]]))


def single_point_space() -> FiniteBimetricSpace:
    return FiniteBimetricSpace((0,), np.zeros((1, 1)))


def _norm_dist(P, p_norm):
    diff = np.abs(P[:, None, :] - P[None, :, :])
    if p_norm == 1:
        return diff.sum(axis=2)
    if p_norm == 2:
        return np.sqrt((diff.astype(np.int64) ** 2).sum(axis=2))
    return diff.max(axis=2)


def _parse_p(p_norm):
    if p_norm in ("inf", "Inf", "infinity", math.inf):
        return math.inf
    if p_norm in (1, 2, "1", "2"):
        return int(p_norm)
    raise DomainError(f"p_norm must be 1, 2 or inf, got {p_norm!r}")


def grid_ball_space(d: int, grid_n: int, p_norm=math.inf, cap: int = DEFAULT_POINT_CAP) -> FiniteBimetricSpace:
    """Uniform grid on [-1, 1]^d (grid_n points per side) intersected with the unit p-ball.

    Labels are the integer grid coordinates ``i`` of the point ``i / h`` with
    ``h = (grid_n - 1) / 2``.
    """
    if d not in (1, 2, 3):
        raise DomainError("d must be 1, 2 or 3")
    if grid_n < 3 or grid_n % 2 == 0:
        raise DomainError("grid_n must be odd and at least 3")
    p = _parse_p(p_norm)
    h = (grid_n - 1) // 2
    axis = np.arange(-h, h + 1)
    P = np.array(list(itertools.product(axis, repeat=d)), dtype=np.int64)
    if p == 1:
        keep = np.abs(P).sum(axis=1) <= h
    elif p == 2:
        keep = (P ** 2).sum(axis=1) <= h * h
    else:
        keep = np.ones(len(P), dtype=bool)
    P = P[keep]
    _check_cap(len(P), cap, "grid ball")
    D = _norm_dist(P, p) / h
    return FiniteBimetricSpace(tuple(tuple(int(c) for c in row) for row in P), D)


def hamming_cube(d: int) -> FiniteBimetricSpace:
    """{0,1}^d with Hamming distance in both metrics."""
    if not 1 <= d <= 12:
        raise DomainError("hamming cube dimension must be in 1..12")
    ids = np.arange(2 ** d)
    x = ids[:, None] ^ ids[None, :]
    D = np.zeros(x.shape, dtype=np.float64)
    for b in range(d):
        D += (x >> b) & 1
    return FiniteBimetricSpace(tuple(format(i, f"0{d}b") for i in ids), D)


def random_closure_space(n: int, seed: int, edge_prob: float = 1.0, low: float = 0.5,
                         high: float = 1.5) -> FiniteBimetricSpace:
    """Shortest-path closure of a random weighted graph.

    The default is the complete graph with uniform weights in [low, high].
    With ``edge_prob < 1`` a random Hamiltonian path is added to keep it connected.
    """
    if n < 1:
        raise DomainError("n must be positive")
    rng = np.random.default_rng(seed)
    W = np.zeros((n, n))
    mask = np.triu(rng.random((n, n)) < edge_prob, 1)
    W[mask] = rng.uniform(low, high, mask.sum())
    perm = rng.permutation(n)
    for a, b in zip(perm[:-1], perm[1:]):
        if W[min(a, b), max(a, b)] == 0:
            W[min(a, b), max(a, b)] = rng.uniform(low, high)
    W = W + W.T
    D = shortest_path(W, method="D", directed=False)
    D = np.minimum(D, D.T)
    return FiniteBimetricSpace(tuple(range(n)), D)


# ---------------------------------------------------------------- ultrametric cubes

@dataclass(frozen=True)
class UltrametricProfile:
    """Scale sequences f (for rho1) and g (for rho2) on k = 1..L."""

    f: tuple
    g: tuple

    def __post_init__(self):
        f = tuple(float(v) for v in self.f)
        g = tuple(float(v) for v in self.g)
        if len(f) < 1 or len(f) != len(g):
            raise DomainError("f and g need the same length L >= 1")
        for name, seq in (("f", f), ("g", g)):
            if any(v <= 0 for v in seq) or any(b >= a for a, b in zip(seq, seq[1:])):
                raise DomainError(f"{name} must be positive and strictly decreasing")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def L(self) -> int:
        return len(self.f)

    @classmethod
    def from_functions(cls, f, g, L: int) -> "UltrametricProfile":
        return cls(tuple(f(k) for k in range(1, L + 1)), tuple(g(k) for k in range(1, L + 1)))

    def to_dict(self):
        return {"L": self.L, "f": list(self.f), "g": list(self.g)}


def baire_profile(L: int, r: float = 2.0, r2: float | None = None) -> UltrametricProfile:
    """f(k) = r^-k and g(k) = r2^-k (r2 defaults to r)."""
    r2 = r if r2 is None else r2
    if r <= 1 or r2 <= 1:
        raise DomainError("Baire base must exceed 1")
    return UltrametricProfile.from_functions(lambda k: r ** -k, lambda k: r2 ** -k, L)


def first_difference(L: int) -> np.ndarray:
    """k[x, y] = first index (1-based, most significant bit first) where x, y differ; 0 on the diagonal."""
    ids = np.arange(2 ** L)
    x = ids[:, None] ^ ids[None, :]
    bitlen = np.frexp(x.astype(np.float64))[1]
    return np.where(x == 0, 0, L - bitlen + 1)


def fg_ultrametric_cube(profile: UltrametricProfile) -> FiniteBimetricSpace:
    L = profile.L
    if L > 12:
        raise DomainError("ultrametric cube depth must be at most 12")
    k = first_difference(L)
    f = np.concatenate([[0.0], profile.f])
    g = np.concatenate([[0.0], profile.g])
    labels = tuple(format(i, f"0{L}b") for i in range(2 ** L))
    return FiniteBimetricSpace(labels, f[k], g[k], ultrametric2=True)


def baire_cube(L: int, r: float = 2.0) -> FiniteBimetricSpace:
    return fg_ultrametric_cube(baire_profile(L, r))


@dataclass(frozen=True)
class ClosedForms:
    alpha: float
    s: float
    k_s: int
    inf_value: float
    k_inf: int
    s_circ: float
    k_circ: int
    entropic_safe: bool
    diametric_safe: bool

    @property
    def truncation_safe(self) -> bool:
        return self.entropic_safe and self.diametric_safe

    def to_dict(self):
        return {"alpha": self.alpha, "s": self.s, "k_s": self.k_s, "inf": self.inf_value,
                "k_inf": self.k_inf, "s_circ": self.s_circ, "k_circ": self.k_circ,
                "entropic_safe": self.entropic_safe, "diametric_safe": self.diametric_safe,
                "truncation_safe": self.truncation_safe}


def theorem64_closed_forms(profile: UltrametricProfile, alpha: float) -> ClosedForms:
    """Closed forms for the entropic and diametric scales of an f-g cube.

    s = g(floor(min_k (k + alpha f(k) / ln 2))) and s_circ = max_k g(k) e^{-alpha f(k)},
    with k over 1..L.  On the depth-L cube g(L + 1) is read as 0 (points agreeing
    on L coordinates coincide).  A value is flagged unsafe when its optimiser
    sits at the truncation boundary, where the infinite cube could differ.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    L = profile.L
    ks = np.arange(1, L + 1)
    f = np.asarray(profile.f)
    g = np.asarray(profile.g)
    vals = ks + alpha * f / math.log(2)
    j = int(vals.argmin())
    m = float(vals[j])
    k_s = min(int(math.floor(m)), L + 1)
    s = float(g[k_s - 1]) if k_s <= L else 0.0
    circ = g * np.exp(-alpha * f)
    c = int(circ.argmax())
    return ClosedForms(float(alpha), s, k_s, m, j + 1, float(circ[c]), c + 1,
                       bool(j + 1 < L and k_s <= L), bool(c + 1 < L))


# ---------------------------------------------------------------- Wasserstein lattice

def lattice_points(d: int, n: int) -> tuple:
    """S = {1..n}^d as integer tuples (the point i / n), lexicographic order."""
    return tuple(itertools.product(range(1, n + 1), repeat=d))


@dataclass(frozen=True)
class LatticeMeasure:
    """Probability measure on S = {1/n, ..., n/n}^d with exact rational weights."""

    d: int
    n: int
    weights: tuple

    def __post_init__(self):
        w = tuple(_frac(v) for v in self.weights)
        if len(w) != self.n ** self.d:
            raise DomainError(f"expected {self.n ** self.d} weights, got {len(w)}")
        if any(v < 0 for v in w):
            raise DomainError("weights must be nonnegative")
        if sum(w) != 1:
            raise DomainError(f"weights sum to {sum(w)}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, d, n, point) -> "LatticeMeasure":
        S = lattice_points(d, n)
        point = tuple(point)
        if point not in S:
            raise DomainError(f"{point} is not in the lattice")
        return cls(d, n, tuple(Fraction(int(p == point)) for p in S))

    @property
    def support(self):
        return [i for i, w in enumerate(self.weights) if w]

    def to_dict(self):
        return {"d": self.d, "n": self.n, "weights": [str(w) for w in self.weights]}


def w1_distance(mu: LatticeMeasure, nu: LatticeMeasure) -> Fraction:
    """Exact 1-Wasserstein distance with l-infinity ground cost, by min-cost flow.

    Weights are scaled to integers by their common denominator and costs are
    measured in lattice steps, so the network simplex runs on integers.
    """
    if (mu.d, mu.n) != (nu.d, nu.n):
        raise DomainError("measures live on different lattices")
    if mu.weights == nu.weights:
        return Fraction(0)
    S = lattice_points(mu.d, mu.n)
    diff = [a - b for a, b in zip(mu.weights, nu.weights)]
    src = [i for i, v in enumerate(diff) if v > 0]
    dst = [i for i, v in enumerate(diff) if v < 0]
    if len(src) + len(dst) > W1_SUPPORT_CAP:
        raise CapExceeded("combined support too large for exact transport",
                          size=len(src) + len(dst), cap=W1_SUPPORT_CAP)
    den = math.lcm(*(v.denominator for v in diff if v))
    G = nx.DiGraph()
    for i in src:
        G.add_node(("s", i), demand=-int(diff[i] * den))
    for j in dst:
        G.add_node(("t", j), demand=int(-diff[j] * den))
    for i in src:
        for j in dst:
            G.add_edge(("s", i), ("t", j), weight=max(abs(a - b) for a, b in zip(S[i], S[j])))
    cost, _ = nx.network_simplex(G)
    return Fraction(cost, den * mu.n)


def compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative ints summing to ``total`` (stars and bars)."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def lattice_measure_space(d: int, n: int, denom: int, cap: int = DEFAULT_POINT_CAP) -> FiniteBimetricSpace:
    """All measures on S with weights in multiples of 1/denom, under W1."""
    m = n ** d
    size = math.comb(denom + m - 1, m - 1)
    _check_cap(size, cap, "lattice measure space")
    comps = list(compositions(denom, m))
    measures = [LatticeMeasure(d, n, tuple(Fraction(c, denom) for c in comp)) for comp in comps]
    D = np.zeros((size, size))
    for i in range(size):
        for j in range(i + 1, size):
            D[i, j] = D[j, i] = float(w1_distance(measures[i], measures[j]))
    return FiniteBimetricSpace(comps, D)


@dataclass(frozen=True)
class CoverStructure:
    gamma: Fraction
    d: int
    n: int
    S: tuple
    lambda_size: int
    path: tuple
    path_length: Fraction

    @property
    def size(self) -> int:
        return len(self.S)

    def to_dict(self):
        return {"gamma": str(self.gamma), "d": self.d, "n": self.n,
                "S": [list(p) for p in self.S], "lambda_size": self.lambda_size,
                "path": list(self.path), "path_length": str(self.path_length)}


def snake_order(d: int, n: int) -> list:
    """Boustrophedon enumeration of {1..n}^d, built by induction on d."""
    if d == 1:
        return [(i,) for i in range(1, n + 1)]
    inner = snake_order(d - 1, n)
    out = []
    for i in range(1, n + 1):
        out.extend((i,) + p for p in (inner if i % 2 else inner[::-1]))
    return out


def wasserstein_cover(d: int, gamma) -> CoverStructure:
    """Grid S with n = ceil(2 / gamma), the count of Lambda and a snake path through S."""
    if d not in (1, 2):
        raise DomainError("d must be 1 or 2")
    gamma = _frac(gamma)
    if not 0 < gamma:
        raise DomainError("gamma must be positive")
    n = math.ceil(2 / gamma)
    S = lattice_points(d, n)
    index = {p: i for i, p in enumerate(S)}
    order = snake_order(d, n)
    length = sum((Fraction(max(abs(a - b) for a, b in zip(p, q)), n) for p, q in zip(order, order[1:])),
                 Fraction(0))
    if length > n ** (d - 1):
        raise AssertionError("snake path longer than n^(d-1)")
    m = len(S)
    return CoverStructure(gamma, d, n, S, math.comb(2 * m - 1, m - 1), tuple(index[p] for p in order), length)


def enumerate_lambda(cover: CoverStructure):
    """Lazily yield every element of Lambda (weights in multiples of 1/|S|)."""
    m = cover.size
    for comp in compositions(m, m):
        yield LatticeMeasure(cover.d, cover.n, tuple(Fraction(c, m) for c in comp))


def in_lambda(mu: LatticeMeasure, cover: CoverStructure) -> bool:
    return (mu.d, mu.n) == (cover.d, cover.n) and all((w * cover.size).denominator == 1 for w in mu.weights)


def round_to_cover(nu: LatticeMeasure, cover: CoverStructure) -> LatticeMeasure:
    """Carry fractional mass along the snake path so every weight becomes a multiple of 1/|S|.

    At step k the accumulated weight is (m_k + w_k)/|S| with m_k an integer and
    0 <= w_k < 1; m_k/|S| stays at x_k and w_k/|S| moves on to x_{k+1}.
    """
    if (nu.d, nu.n) != (cover.d, cover.n):
        raise DomainError("measure is not supported on the cover's grid")
    m = cover.size
    out = [Fraction(0)] * m
    carry = Fraction(0)
    for i in cover.path:
        total = (nu.weights[i] + carry) * m
        whole = math.floor(total)
        out[i] = Fraction(whole, m)
        carry = (total - whole) / m
    if carry != 0:
        raise AssertionError("rounding left mass on the last path point")
    res = LatticeMeasure(nu.d, nu.n, tuple(out))
    if not in_lambda(res, cover):
        raise AssertionError("rounded measure is not in Lambda")
    if w1_distance(nu, res) > Fraction(1, cover.n):
        raise AssertionError("rounding moved the measure further than 1/n")
    return res


def random_lattice_measure(d: int, n: int, rng, max_den: int = 60) -> LatticeMeasure:
    """Random measure with rational weights of denominator ``max_den``."""
    m = n ** d
    cuts = np.sort(rng.integers(0, max_den + 1, m - 1))
    parts = np.diff(np.concatenate([[0], cuts, [max_den]]))
    return LatticeMeasure(d, n, tuple(Fraction(int(p), max_den) for p in parts))


# ---------------------------------------------------------------- Lipschitz nets

def lipschitz_net_space(grid_n: int, value_step, cap: int = DEFAULT_POINT_CAP) -> FiniteBimetricSpace:
    """Functions on {0, 1/grid_n, ..., 1} with f(0) = 0, values in value_step Z,
    and every increment at most 1/grid_n in absolute value; sup-norm distance.

    Labels are the value tuples (f(t_1), ..., f(t_grid_n)) in units of value_step.
    """
    if grid_n < 1:
        raise DomainError("grid_n must be positive")
    step = _frac(value_step)
    if step <= 0:
        raise DomainError("value_step must be positive")
    J = math.floor(Fraction(1, grid_n) / step)
    size = (2 * J + 1) ** grid_n
    _check_cap(size, cap, "Lipschitz net")
    incs = list(itertools.product(range(-J, J + 1), repeat=grid_n))
    F = np.cumsum(np.array(incs, dtype=np.int64), axis=1)
    D = np.abs(F[:, None, :] - F[None, :, :]).max(axis=2) * float(step)
    return FiniteBimetricSpace(tuple(tuple(int(v) for v in row) for row in F), D)


# ---------------------------------------------------------------- registry

def _p(v):
    return "inf" if v in ("inf", math.inf) else int(v)


BUILDERS = {
    "line": lambda n=4, step=1.0: line_space(int(n), float(step)),
    "two_point": lambda distance=1.0: two_point_space(float(distance)),
    "single_point": lambda: single_point_space(),
    "hamming": lambda d=3: hamming_cube(int(d)),
    "baire": lambda L=6, r=2.0: baire_cube(int(L), float(r)),
    "fg": lambda L=6, r1=3.0, r2=2.0: fg_ultrametric_cube(baire_profile(int(L), float(r1), float(r2))),
    "grid_ball": lambda d=1, grid_n=5, p="inf": grid_ball_space(int(d), int(grid_n), _p(p)),
    "lattice": lambda d=1, n=4, denom=4: lattice_measure_space(int(d), int(n), int(denom)),
    "lipschitz": lambda grid_n=3, value_step="1/3": lipschitz_net_space(int(grid_n), value_step),
    "random_closure": lambda n=12, seed=0: random_closure_space(int(n), int(seed)),
}


def build(name: str, **params) -> FiniteBimetricSpace:
    if name not in BUILDERS:
        raise DomainError(f"unknown gallery space {name!r}; known: {', '.join(sorted(BUILDERS))}")
    try:
        return BUILDERS[name](**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name}: {exc}") from exc


#: the fixed collection used by the privacy, lower-bound, upper-bound and lemma suites
STANDARD_GALLERY = (
    ("line4", "line", {"n": 4}),
    ("two_point", "two_point", {}),
    ("hamming3", "hamming", {"d": 3}),
    ("hamming5", "hamming", {"d": 5}),
    ("baire6", "baire", {"L": 6}),
    ("baire10", "baire", {"L": 10}),
    ("fg6", "fg", {"L": 6, "r1": 3.0, "r2": 2.0}),
    ("ball_d1_inf_33", "grid_ball", {"d": 1, "grid_n": 33, "p": "inf"}),
    ("ball_d2_inf_9", "grid_ball", {"d": 2, "grid_n": 9, "p": "inf"}),
    ("ball_d2_l1_7", "grid_ball", {"d": 2, "grid_n": 7, "p": 1}),
    ("ball_d2_l2_7", "grid_ball", {"d": 2, "grid_n": 7, "p": 2}),
    ("lattice_1_4_4", "lattice", {"d": 1, "n": 4, "denom": 4}),
    ("lipschitz_3", "lipschitz", {"grid_n": 3, "value_step": "1/3"}),
)


def standard_gallery():
    """Yield ``(name, space)`` for every space of the standard collection."""
    for name, kind, params in STANDARD_GALLERY:
        yield name, build(kind, **params)


def export_json(space: FiniteBimetricSpace, path) -> None:
    space.save(path)


def export_cover_json(cover: CoverStructure, path) -> None:
    with open(path, "w") as fh:
        json.dump(cover.to_dict(), fh)
