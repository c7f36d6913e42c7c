import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mplab import _pykernels, kernels
from mplab.gallery import random_closure_space

_ck = pytest.importorskip("mplab._ckernels")
from conftest import brute_packing  # noqa: E402


def test_backend_selected():
    assert kernels.BACKEND == "cython"


def _space(seed, n):
    return np.ascontiguousarray(random_closure_space(n, seed).rho1)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 13), q=st.floats(0.0, 1.0))
def test_backends_agree(seed, n, q):
    D = _space(seed, n)
    eps = float(np.quantile(D, q))
    order = np.random.default_rng(seed).permutation(n).astype(np.intp)
    for name in ("greedy_separated", "prefix_diameters"):
        assert np.array_equal(getattr(_pykernels, name)(D, order, eps) if name == "greedy_separated"
                              else _pykernels.prefix_diameters(D, order),
                              getattr(_ck, name)(D, order, eps) if name == "greedy_separated"
                              else _ck.prefix_diameters(D, order))
    assert _pykernels.clique_cover_count(D, order, eps) == _ck.clique_cover_count(D, order, eps)
    conflict = D <= eps
    a, b = _pykernels.max_independent_set(conflict), _ck.max_independent_set(conflict)
    assert len(a) == len(b) == brute_packing(D, range(n), eps)
    assert not conflict[np.ix_(b, b)][~np.eye(len(b), dtype=bool)].any()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 10))
def test_audit_and_triangle_agree(seed, n):
    rng = np.random.default_rng(seed)
    D = _space(seed, n)
    logp = np.ascontiguousarray(np.log(rng.dirichlet(np.ones(5), size=n)))
    assert _pykernels.audit_slope(logp, D) == _ck.audit_slope(logp, D)
    assert _pykernels.triangle_witness(D, False, 1e-12) is None
    E = D.copy()
    E[0, 1] = E[1, 0] = D.max() * 3
    assert _pykernels.triangle_witness(E, False, 0.0) == _ck.triangle_witness(E, False, 0.0)
    assert _pykernels.triangle_witness(D, True, 0.0) == _ck.triangle_witness(D, True, 0.0)


def test_mis_large_sparse():
    rng = np.random.default_rng(3)
    n = 90
    A = rng.random((n, n)) < 0.08
    A = A | A.T
    np.fill_diagonal(A, True)
    a, b = _pykernels.max_independent_set(A), _ck.max_independent_set(A)
    assert len(a) == len(b)
    assert not A[np.ix_(b, b)][~np.eye(len(b), dtype=bool)].any()


def test_pure_python_switch(monkeypatch):
    import importlib
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "from mplab import kernels; print(kernels.BACKEND)"],
                         env={**__import__("os").environ, "MPLAB_PURE_PYTHON": "1"},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
