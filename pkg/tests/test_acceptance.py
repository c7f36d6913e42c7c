"""Acceptance criteria, one test each.

Every test records its verdict, runtime and a short detail string; the
terminal summary prints one PASS/FAIL line per criterion.  A criterion
passes only if its property holds and it finishes within its time target.
"""

import functools
import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from mplab.gallery import (baire_cube, baire_profile, build, fg_ultrametric_cube, grid_ball_space, hamming_cube,
                           in_lambda, line_space, lipschitz_net_space, random_closure_space, random_lattice_measure,
                           round_to_cover, single_point_space, standard_gallery, theorem64_closed_forms,
                           two_point_space, wasserstein_cover)
from mplab.mechanisms import (accuracy_mc, audit_privacy, build_constant, build_exponential,
                              build_nearest_rounding, build_ultrametric_relaxed, exact_accuracy,
                              exponential_upper_bound, verify_relaxed_lemmas)
from mplab.packing import verify_packing_facts
from mplab.scales import diametric_scale, doubling_scale, entropic_scale, outer_scale, verify_scale_relations

from conftest import record_criterion
from oracles import SubsetTable, diametric_oracle, doubling_oracle, entropic_oracle, outer_oracle

pytestmark = pytest.mark.acceptance

ALPHAS = (0.25, 1.0, 4.0, 16.0)
AUDIT_TOL = 1e-9


@functools.lru_cache(maxsize=None)
def gallery():
    return tuple(standard_gallery())


@functools.lru_cache(maxsize=None)
def mechanisms(name, alpha):
    """Mechanisms built on one gallery space at one alpha, with their audits and accuracies."""
    space = dict(gallery())[name]
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        kinds = [("exponential", build_exponential(space, alpha))]
        if space.ultrametric2:
            kinds.append(("ultrametric_relaxed", build_ultrametric_relaxed(space, alpha)))
    kinds.append(("constant", build_constant(space, 0, alpha)))
    for kind, m in kinds:
        out.append((kind, m, audit_privacy(m, space), exact_accuracy(m, space).sup_error))
    return out


def finish(number, title, failures, t0, target, detail=""):
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < target
    if failures:
        detail = f"{len(failures)} violation(s), first: {failures[0]}"
    record_criterion(number, title, ok, elapsed, target, detail)
    assert not failures, failures[:5]
    assert elapsed < target, f"took {elapsed:.1f}s, target {target}s"


def test_criterion_01_closed_forms():
    t0 = time.perf_counter()
    profile = baire_profile(10)
    space = fg_ultrametric_cube(profile)
    fails, checked = [], 0
    for e in range(-3, 7):
        a = 2.0 ** e
        cf = theorem64_closed_forms(profile, a)
        if not cf.truncation_safe:
            continue
        checked += 1
        ent = entropic_scale(space, a).value
        dia = diametric_scale(space, a).value
        if ent != cf.s:
            fails.append(("entropic", a, ent, cf.s))
        if abs(dia - cf.s_circ) > 1e-12:
            fails.append(("diametric", a, dia, cf.s_circ))
    assert checked == 10
    finish(1, "closed forms on the L=10 dyadic cube", fails, t0, 60, f"{checked} alphas exact")


def test_criterion_02_privacy_audits():
    t0 = time.perf_counter()
    fails, audits = [], 0
    for name, space in gallery():
        for a in ALPHAS:
            for kind, m, audit, _ in mechanisms(name, a):
                audits += 1
                if not (audit.passed and audit.max_slope <= a * (1 + AUDIT_TOL)):
                    fails.append((name, a, kind, audit.max_slope))
    caught = 0
    for space in (line_space(4), hamming_cube(3), baire_cube(4)):
        bad = audit_privacy(build_nearest_rounding(space, 0.0, alpha=1.0), space)
        caught += not bad.passed and math.isfinite(bad.max_slope)
    if caught != 3:
        fails.append(("counterexample not caught", caught))
    finish(2, "privacy audits on the gallery", fails, t0, 120, f"{audits} audits, counterexample caught 3/3")


def test_criterion_03_lower_bounds():
    t0 = time.perf_counter()
    fails, checked = [], 0
    for name, space in gallery():
        for a in ALPHAS:
            s2 = entropic_scale(space, 2 * a).value
            d2 = diametric_scale(space, 2 * a).value
            for kind, m, audit, acc in mechanisms(name, a):
                if not audit.passed:
                    continue
                checked += 1
                if acc < s2 / 8 or acc < d2 / 5:
                    fails.append((name, a, kind, acc, s2 / 8, d2 / 5))
    finish(3, "lower bounds for audited mechanisms", fails, t0, 120, f"{checked} mechanisms")


def test_criterion_04_upper_bound():
    t0 = time.perf_counter()
    fails, checked = [], 0
    for name, space in gallery():
        if not space.same_metric:
            continue
        for a in ALPHAS:
            m = mechanisms(name, a)[0][1]
            assert m.net_s == entropic_scale(space, a / 3).value
            acc = mechanisms(name, a)[0][3]
            checked += 1
            if acc > exponential_upper_bound(a, m.net_s):
                fails.append((name, a, acc, exponential_upper_bound(a, m.net_s)))
    finish(4, "exponential mechanism upper bound (34, 40)", fails, t0, 60, f"{checked} (space, alpha) pairs")


def test_criterion_05_relaxed_lemmas():
    t0 = time.perf_counter()
    fails, checked = [], 0
    for name, space in gallery():
        if not space.ultrametric2:
            continue
        for a in ALPHAS:
            m = next(m for kind, m, _, _ in mechanisms(name, a) if kind == "ultrametric_relaxed")
            rep = verify_relaxed_lemmas(space, m)
            checked += 1
            fails += [(name, a, c.name, c.worst) for c in rep.checks if not c.ok]
    finish(5, "relaxed ultrametric lemma suite", fails, t0, 120, f"{checked} (space, alpha) pairs")


def test_criterion_06_universal_facts():
    t0 = time.perf_counter()
    fails, checks = [], 0
    for seed in range(100):
        space = random_closure_space(12, seed)
        facts = verify_packing_facts(space, 1, samples=30, seed=seed)
        checks += len(facts.checks)
        fails += [(seed, v.fact, v.lhs, v.rhs) for v in facts.violations]
        for a in (0.1, 1.0, 10.0):
            rel = verify_scale_relations(space, a)
            checks += sum(c.applicable and c.asserted for c in rel.checks)
            fails += [(seed, a, c.name, c.lhs, c.rhs) for c in rel.failures]
    finish(6, "universal facts on 100 random closure spaces", fails, t0, 120, f"{checks} checks")


def _w1_linprog(mu, nu, S, n):
    m = len(S)
    C = np.array([[max(abs(p - q) for p, q in zip(x, y)) / n for y in S] for x in S])
    A = np.vstack([np.kron(np.eye(m), np.ones(m)), np.kron(np.ones(m), np.eye(m))])
    b = np.array([float(w) for w in mu.weights] + [float(w) for w in nu.weights])
    res = linprog(C.ravel(), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    return res.fun


def test_criterion_07_wasserstein_cover():
    t0 = time.perf_counter()
    fails, rounded = [], 0
    rng = np.random.default_rng(0)
    for d, g in ((1, Fraction(1, 2)), (1, Fraction(1, 4)), (2, Fraction(1, 2))):
        c = wasserstein_cover(d, g)
        m = c.size
        if c.lambda_size != math.comb(2 * m - 1, m - 1):
            fails.append(("count", d, g))
        if (d, g) == (1, Fraction(1, 2)) and c.lambda_size != 35:
            fails.append(("count35", c.lambda_size))
        if c.path_length > c.n ** (d - 1):
            fails.append(("path", d, g, c.path_length))
        for _ in range(200):
            nu = random_lattice_measure(d, c.n, rng)
            out = round_to_cover(nu, c)
            rounded += 1
            lp = _w1_linprog(nu, out, c.S, c.n)
            if not in_lambda(out, c) or lp > 1 / c.n + 1e-9:
                fails.append(("round", d, g, lp))
    finish(7, "Wasserstein cover: count, snake path, rounding", fails, t0, 180, f"{rounded} roundings LP-checked")


def test_criterion_08_unit_ball():
    t0 = time.perf_counter()
    fails, ratios = [], []
    for d, alphas in ((1, (1.0, 2.0, 3.0, 4.0)), (2, (1.0, 2.0, 4.0, 8.0))):
        space = grid_ball_space(d, 33, "inf")
        spacing = 2 / 32
        for a in alphas:
            target = min(d / a, 1.0)
            assert target >= 4 * spacing
            s = entropic_scale(space, a).value
            ratios.append(s / target)
            if not target / 8 <= s <= 8 * target:
                fails.append((d, a, s, target))
    finish(8, "unit-ball entropic scale within factor 8", fails, t0, 120,
           f"ratios in [{min(ratios):.3f}, {max(ratios):.3f}]")


def _mc_checks(mech, space, fails, label):
    r1 = accuracy_mc(mech, space, 10_000, 0)
    r2 = accuracy_mc(mech, space, 10_000, 0)
    if not (np.array_equal(r1.mc_mean, r2.mc_mean) and np.array_equal(r1.mc_stderr, r2.mc_stderr)):
        fails.append((label, "rerun differs"))
    dev = np.abs(r1.mc_mean - r1.per_input)
    bad = np.flatnonzero(dev > 3 * r1.mc_stderr)
    fails += [(label, int(x), float(dev[x]), float(r1.mc_stderr[x])) for x in bad]
    return int(space.n)


def test_criterion_09_monte_carlo():
    t0 = time.perf_counter()
    fails, inputs = [], 0
    two = two_point_space()
    inputs += _mc_checks(build_exponential(two, 2 * math.log(3), net_s=0), two, fails, "two_point")
    cube = baire_cube(4)
    inputs += _mc_checks(build_exponential(cube, 16.0), cube, fails, "baire4_exp")
    inputs += _mc_checks(build_ultrametric_relaxed(cube, 16.0), cube, fails, "baire4_relaxed")
    finish(9, "Monte Carlo within 3 stderr, reruns identical", fails, t0, 60, f"{inputs} inputs, seed 0")


def small_spaces():
    yield "single", single_point_space()
    yield "two_point", two_point_space()
    yield "line4", line_space(4)
    yield "line7", line_space(7)
    yield "hamming2", hamming_cube(2)
    yield "hamming3", hamming_cube(3)
    yield "baire2", baire_cube(2)
    yield "baire3", baire_cube(3)
    yield "fg3", fg_ultrametric_cube(baire_profile(3, 3.0, 2.0))
    for n in (5, 7, 9, 11):
        yield f"ball{n}", grid_ball_space(1, n)
    yield "ball_d2_l1_3", grid_ball_space(2, 3, 1)
    yield "ball_d2_inf_3", grid_ball_space(2, 3, "inf")
    yield "lipschitz2", lipschitz_net_space(2, Fraction(1, 2))
    yield "lattice_1_2_3", build("lattice", d=1, n=2, denom=3)
    for seed in range(20):
        yield f"random{seed}", random_closure_space(12, seed)


def test_criterion_10_scale_oracle():
    t0 = time.perf_counter()
    fails, compared = [], 0
    for name, space in small_spaces():
        assert space.n <= 12
        tab2 = SubsetTable(space.rho2)
        for a in ALPHAS:
            v, step = entropic_oracle(space, a, tab2)
            ours = entropic_scale(space, a).value
            compared += 1
            if not abs(ours - v) <= step:
                fails.append((name, a, "entropic", ours, v))
            v, step = diametric_oracle(space, a)
            ours = diametric_scale(space, a).value
            compared += 1
            if not abs(ours - v) <= step:
                fails.append((name, a, "diametric", ours, v))
            if not space.same_metric:
                continue
            v, step = outer_oracle(space, a, tab2)
            ours = outer_scale(space, a).value
            compared += 1
            if not abs(ours - v) <= step:
                fails.append((name, a, "outer", ours, v))
            if space.n > 1:
                first, stable, step = doubling_oracle(space, a, tab2)
                dbl = doubling_scale(space, a, stable=True)
                compared += 2
                if not abs(dbl.value - first) <= step:
                    fails.append((name, a, "doubling", dbl.value, first))
                if not abs(dbl.witness["stable_from"] - stable) <= step:
                    fails.append((name, a, "doubling_stable_from", dbl.witness["stable_from"], stable))
            elif doubling_scale(space, a).value != 0:
                fails.append((name, a, "doubling", "single point"))
    finish(10, "all four scales against a 10^4-point grid oracle", fails, t0, 120, f"{compared} comparisons")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
