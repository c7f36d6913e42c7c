import json
import math

import numpy as np
import pytest

from mplab.errors import DomainError
from mplab.gallery import baire_cube, hamming_cube, line_space, random_closure_space
from mplab.mechanisms import (TAIL_CONSTANT, accuracy_mc, audit_privacy, build_constant, build_exponential,
                              build_nearest_rounding, build_ultrametric_relaxed, exact_accuracy,
                              exponential_upper_bound, output_distribution, relaxed_distance, sample,
                              series_constants, verify_relaxed_lemmas)
from mplab.metric import FiniteBimetricSpace

LN2 = math.log(2)


@pytest.fixture
def two_mech(two_point):
    return build_exponential(two_point, 2 * math.log(3), net_s=0)


def test_two_point_distribution(two_point, two_mech):
    d = output_distribution(two_mech, 0)
    assert d.support[0] == (0, pytest.approx(0.75, abs=1e-12))
    assert d.support[1] == (1, pytest.approx(0.25, abs=1e-12))
    acc = exact_accuracy(two_mech, two_point)
    assert acc.per_input[0] == pytest.approx(0.25, abs=1e-12)
    assert acc.sup_error == pytest.approx(0.25, abs=1e-12)


def test_normalisation(line4):
    m = build_exponential(line4, 3.0, net_s=0)
    assert np.allclose(m.probs.sum(axis=1), 1, atol=1e-12, rtol=0)
    assert np.allclose(m.log_weights, -3.0 * line4.rho1 / 2)


def test_single_point(single):
    m = build_exponential(single, 1.0)
    assert sample(m, 0, 123) == 0
    assert exact_accuracy(m, single).sup_error == 0


def test_line_exponential_audit(line4):
    with pytest.warns(UserWarning):
        m = build_exponential(line4, LN2)
    assert m.net_s == 3.0
    a = audit_privacy(m, line4)
    assert a.passed and a.max_slope <= LN2 / 2 + 1e-12


def test_audit_slope_bound_is_alpha_not_half():
    # on the line the exponential mechanism's slope exceeds alpha/2 but never alpha
    s = line_space(6)
    m = build_exponential(s, 2.0, net_s=0)
    a = audit_privacy(m, s)
    assert a.passed
    assert 2.0 / 2 < a.max_slope <= 2.0 * (1 + 1e-9)


def test_constant(line4):
    c = build_constant(line4, 1)
    assert audit_privacy(c, line4).max_slope == 0
    assert exact_accuracy(c, line4).sup_error == 2
    assert all(sample(c, x, seed) == 1 for x in range(4) for seed in range(5))
    mc = accuracy_mc(c, line4, 50, 0)
    assert np.array_equal(mc.mc_mean, mc.per_input) and np.all(mc.mc_stderr == 0)
    with pytest.raises(DomainError):
        build_constant(line4, 7)


def test_rounding_counterexample_fails(line4):
    r = build_nearest_rounding(line4, 1.0, alpha=1.0)
    a = audit_privacy(r, line4)
    assert not a.passed and math.isfinite(a.max_slope) and len(a.witness) == 3


def test_relaxed_sigma(baire2):
    sig = relaxed_distance(baire2, 0.25)
    i = {l: k for k, l in enumerate(baire2.labels)}
    assert sig[i["00"], i["11"]] == 0.5
    assert sig[i["00"], i["01"]] == 0


def test_relaxed_collapses(baire2):
    with pytest.warns(UserWarning):
        m = build_ultrametric_relaxed(baire2, 1.0, relax_s=1.0)
    assert len(m.net) == 1
    assert audit_privacy(m, baire2).max_slope == 0


def test_relaxed_needs_ultrametric(line4):
    with pytest.raises(DomainError):
        build_ultrametric_relaxed(line4, 1.0)


def test_relaxed_baire6_audit():
    s = baire_cube(6)
    m = build_ultrametric_relaxed(s, LN2)
    a = audit_privacy(m, s)
    assert a.passed and a.max_slope <= LN2 * (1 + 1e-9)


@pytest.mark.parametrize("alpha", [0.5, 4.0, 32.0])
def test_relaxed_lemmas(alpha):
    s = baire_cube(6)
    rep = verify_relaxed_lemmas(s, build_ultrametric_relaxed(s, alpha))
    assert rep.ok, rep.to_dict()


def test_tail_constant():
    assert TAIL_CONSTANT == pytest.approx(2 / (1 - math.exp(-1 / 6)))


def test_sample_frequency(two_mech):
    hits = sum(sample(two_mech, 0, seed) == 0 for seed in range(100_000))
    p = 0.75
    assert abs(hits / 1e5 - p) <= 3 * math.sqrt(p * (1 - p) / 1e5)


def test_sample_is_trial_zero(two_point, two_mech):
    from mplab import rng
    for seed in range(20):
        u = rng.uniforms(seed, 0, 1)[0]
        assert sample(two_mech, 0, seed) == (0 if u < 0.75 else 1)


def test_mc(two_point, two_mech):
    r = accuracy_mc(two_mech, two_point, 10_000, 7)
    assert np.all(np.abs(r.mc_mean - r.per_input) <= 3 * r.mc_stderr)
    r2 = accuracy_mc(two_mech, two_point, 10_000, 7)
    assert np.array_equal(r.mc_mean, r2.mc_mean) and np.array_equal(r.mc_stderr, r2.mc_stderr)


def test_mc_single_trial(two_point, two_mech):
    r = accuracy_mc(two_mech, two_point, 1, 0)
    assert not r.stderr_defined and np.all(np.isnan(r.mc_stderr))
    json.dumps(r.to_dict())
    with pytest.raises(DomainError):
        accuracy_mc(two_mech, two_point, 0, 0)


def test_audit_relabel_invariant():
    s = random_closure_space(9, 4)
    perm = np.random.default_rng(1).permutation(9)
    t = FiniteBimetricSpace(None, s.rho1[np.ix_(perm, perm)])
    a = audit_privacy(build_exponential(s, 1.5, net_s=0), s).max_slope
    b = audit_privacy(build_exponential(t, 1.5, net_s=0), t).max_slope
    assert a == pytest.approx(b, rel=1e-12)


def test_upper_bound_and_series():
    c = series_constants()
    assert c["c_s"] <= 34 and c["c_inv"] <= 40
    assert exponential_upper_bound(1.0, 0.0) == 40.0
    s = hamming_cube(4)
    for alpha in (0.5, 2, 8):
        m = build_exponential(s, alpha)
        assert exact_accuracy(m, s).sup_error <= exponential_upper_bound(alpha, m.net_s)


def test_json_summaries(two_mech, two_point):
    json.dumps(two_mech.to_dict())
    json.dumps(audit_privacy(two_mech, two_point).to_dict())
    json.dumps(build_constant(two_point, 0).to_dict())


def test_bad_alpha(line4):
    with pytest.raises(DomainError):
        build_exponential(line4, -1)
