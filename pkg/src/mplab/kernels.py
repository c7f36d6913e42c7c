"""Backend selection for the hot kernels.

The compiled extension ``mplab._ckernels`` is used when it is importable;
otherwise the numpy implementation in ``mplab._pykernels`` is used.  Setting
``MPLAB_PURE_PYTHON=1`` forces the fallback (used by the benchmark and by
the backend-equivalence tests).
"""

import os

import numpy as np

from mplab import _pykernels

try:
    if os.environ.get("MPLAB_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from mplab import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"



def _mat(D):
    return np.ascontiguousarray(D, dtype=np.float64)


def _idx(order):
    return np.ascontiguousarray(order, dtype=np.intp)


def triangle_witness(D, ultra, rtol):
    return _impl.triangle_witness(_mat(D), bool(ultra), float(rtol))


def greedy_separated(D, order, eps):
    return _impl.greedy_separated(_mat(D), _idx(order), float(eps))


def clique_cover_count(D, order, eps):
    return int(_impl.clique_cover_count(_mat(D), _idx(order), float(eps)))


def max_independent_set(conflict):
    return _impl.max_independent_set(np.asarray(conflict, dtype=bool))


def prefix_diameters(D, order):
    return _impl.prefix_diameters(_mat(D), _idx(order))


def audit_slope(logp, D):
    return _impl.audit_slope(_mat(logp), _mat(D))
