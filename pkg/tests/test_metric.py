import numpy as np
import pytest

from mplab.errors import DomainError, StructuralError
from mplab.gallery import baire_cube, hamming_cube
from mplab.metric import FiniteBimetricSpace, ball, diameter, distance_spectrum, validate


def test_line_is_valid(line4):
    assert validate(line4).ok


def test_triangle_violation_witness():
    D1 = np.abs(np.subtract.outer(np.arange(3.0), np.arange(3.0)))
    D2 = D1.copy()
    D2[0, 2] = D2[2, 0] = 3
    rep = validate(FiniteBimetricSpace(None, D1, D2))
    tri = [v for v in rep.violations if v.axiom == "triangle"]
    assert tri and tri[0].metric == 2
    x, y, z = tri[0].witness
    assert {x, z} == {0, 2} and y == 1


def test_baire_ultrametric_valid(baire2):
    assert validate(baire2).ok
    assert baire2.ultrametric2


def test_false_ultrametric_claim_reported(line4):
    s = FiniteBimetricSpace(line4.labels, line4.rho1, ultrametric2=True)
    assert any(v.axiom == "ultrametric" for v in validate(s).violations)


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[0, np.nan], [np.nan, 0]]),
                                 np.array([[0, -1.0], [-1.0, 0]])])
def test_structural_errors(bad):
    with pytest.raises(StructuralError):
        FiniteBimetricSpace(None, bad)


def test_shape_mismatch():
    with pytest.raises(StructuralError):
        FiniteBimetricSpace(None, np.zeros((2, 2)), np.zeros((3, 3)))


def test_pseudo_metric_rejected():
    rep = validate(FiniteBimetricSpace(None, np.zeros((2, 2))))
    assert not rep.ok and rep.violations[0].axiom == "positivity"


def test_balls(line4, baire2):
    assert list(ball(line4, 1, 1, 1)) == [0, 1, 2]
    assert list(ball(baire2, 1, 0, 0.25)) == [0, 1]
    for x in range(4):
        assert list(ball(line4, 1, x, 0)) == [x]


def test_diameter(line4, baire2):
    assert diameter(line4, 1, range(4)) == 3
    assert diameter(line4, 1, [2]) == 0
    assert diameter(baire2, 2, [0, 1]) == 0.25
    with pytest.raises(DomainError):
        diameter(line4, 1, [])


def test_spectra(line4, baire2, single):
    assert list(distance_spectrum(line4, 1).values) == [1, 2, 3]
    assert list(distance_spectrum(baire2, 2).values) == [0.25, 0.5]
    assert list(distance_spectrum(hamming_cube(3), 1).values) == [1, 2, 3]
    assert len(distance_spectrum(single, 1)) == 0


def test_ball_monotone_and_constant_between_spectrum(line4):
    for x in range(4):
        prev = set()
        for r in np.linspace(0, 4, 81):
            b = set(ball(line4, 1, x, r))
            assert prev <= b
            assert b == set(ball(line4, 1, x, np.floor(r)))
            prev = b


def test_diameter_le_2r():
    s = hamming_cube(4)
    for x in range(s.n):
        for r in (1, 2, 3):
            assert diameter(s, 1, ball(s, 1, x, r)) <= 2 * r


def test_ultrametric_every_point_is_center():
    s = baire_cube(5)
    D = s.rho2
    for x in range(s.n):
        for r in np.unique(D[x]):
            b = set(ball(s, 2, x, r))
            for y in b:
                assert set(ball(s, 2, y, r)) == b


def test_json_roundtrip(tmp_path, baire2, line4):
    for s in (baire2, line4):
        p = tmp_path / "s.json"
        s.save(p)
        t = FiniteBimetricSpace.load(p)
        assert t.labels == s.labels and np.array_equal(t.rho1, s.rho1) and np.array_equal(t.rho2, s.rho2)
        assert t.ultrametric2 == s.ultrametric2 and t.same_metric == s.same_metric


def test_missing_rho2_means_same():
    s = FiniteBimetricSpace.from_dict({"rho1": [[0, 1], [1, 0]]})
    assert s.same_metric and s.rho2 is s.rho1


def test_matrices_are_frozen(line4):
    with pytest.raises(ValueError):
        line4.rho1[0, 1] = 5
