import itertools

import numpy as np
import pytest

from mplab.gallery import baire_cube, hamming_cube, line_space, single_point_space, two_point_space


@pytest.fixture
def line4():
    return line_space(4)


@pytest.fixture
def two_point():
    return two_point_space()


@pytest.fixture
def single():
    return single_point_space()


@pytest.fixture
def baire2():
    return baire_cube(2)


@pytest.fixture
def hamming2():
    return hamming_cube(2)


def brute_packing(D, idx, eps):
    """Largest eps-separated subset of idx by exhaustive search."""
    idx = list(idx)
    for k in range(len(idx), 0, -1):
        for c in itertools.combinations(idx, k):
            if all(D[a, b] > eps for a, b in itertools.combinations(c, 2)):
                return k
    return 0


ACCEPTANCE = {}


def record_criterion(number, title, passed, elapsed, target, detail=""):
    ACCEPTANCE[number] = (title, passed, elapsed, target, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, t, target, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {title}  "
                                    f"[{t:.1f}s, target < {target}s] {detail}")
