"""Finite bimetric spaces: storage, validation, balls, diameters and spectra."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from mplab import kernels
from mplab.errors import DomainError, StructuralError

#: Relative slack for the triangle / max-triangle checks on float input.
AXIOM_RTOL = 1e-12


def _as_matrix(a, name):
    try:
        m = np.array(a, dtype=np.float64, order="C")
    except (TypeError, ValueError) as exc:
        raise StructuralError(f"{name} is not a numeric matrix") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise StructuralError(f"{name} has non-finite entries")
    if np.any(m < 0):
        i, j = np.argwhere(m < 0)[0]
        raise StructuralError(f"{name}[{i}][{j}] is negative")
    m.setflags(write=False)
    return m


def _label(v):
    if isinstance(v, list):
        return tuple(_label(x) for x in v)
    return v


@dataclass(frozen=True, eq=False)
class FiniteBimetricSpace:
    """Points with two dense distance matrices.

    ``rho1`` measures privacy, ``rho2`` measures accuracy.  Passing
    ``rho2=None`` reuses ``rho1``.  Matrices are copied and frozen.
    """

    labels: tuple
    rho1: np.ndarray
    rho2: np.ndarray | None = None
    ultrametric2: bool = False
    _same: bool = field(init=False, repr=False)

    def __post_init__(self):
        r1 = _as_matrix(self.rho1, "rho1")
        if self.rho2 is None or self.rho2 is self.rho1:
            r2, same = r1, True
        else:
            r2 = _as_matrix(self.rho2, "rho2")
            if r2.shape != r1.shape:
                raise StructuralError(f"rho1 is {r1.shape} but rho2 is {r2.shape}")
            same = bool(np.array_equal(r1, r2))
            if same:
                r2 = r1
        labels = tuple(self.labels) if self.labels is not None else tuple(range(r1.shape[0]))
        if len(labels) != r1.shape[0]:
            raise StructuralError(f"{len(labels)} labels for {r1.shape[0]} points")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "rho1", r1)
        object.__setattr__(self, "rho2", r2)
        object.__setattr__(self, "ultrametric2", bool(self.ultrametric2))
        object.__setattr__(self, "_same", same)

    @property
    def n(self) -> int:
        return self.rho1.shape[0]

    @property
    def same_metric(self) -> bool:
        return self._same

    def rho(self, metric: int) -> np.ndarray:
        if metric == 1:
            return self.rho1
        if metric == 2:
            return self.rho2
        raise DomainError(f"metric index must be 1 or 2, got {metric!r}")

    def to_dict(self) -> dict:
        d = {
            "labels": [list(x) if isinstance(x, tuple) else x for x in self.labels],
            "rho1": self.rho1.tolist(),
            "ultrametric2": self.ultrametric2,
        }
        if not self.same_metric:
            d["rho2"] = self.rho2.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteBimetricSpace":
        if "rho1" not in d:
            raise StructuralError("space document has no 'rho1'")
        labels = d.get("labels")
        if labels is not None:
            labels = [_label(x) for x in labels]
        return cls(labels, d["rho1"], d.get("rho2"), bool(d.get("ultrametric2", False)))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "FiniteBimetricSpace":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Violation:
    axiom: str
    metric: int
    witness: tuple

    def to_dict(self):
        return {"axiom": self.axiom, "metric": self.metric, "witness": list(self.witness)}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def _metric_violations(D, metric, ultra, rtol):
    out = []
    n = D.shape[0]
    diag = np.flatnonzero(np.diag(D) != 0)
    if diag.size:
        out.append(Violation("zero_diagonal", metric, (int(diag[0]),)))
    off = (D == 0) & ~np.eye(n, dtype=bool)
    if off.any():
        i, j = np.argwhere(off)[0]
        out.append(Violation("positivity", metric, (int(i), int(j))))
    asym = D != D.T
    if asym.any():
        i, j = np.argwhere(asym)[0]
        out.append(Violation("symmetry", metric, (int(i), int(j))))
    w = kernels.triangle_witness(D, False, rtol)
    if w is not None:
        out.append(Violation("triangle", metric, w))
    if ultra:
        w = kernels.triangle_witness(D, True, rtol)
        if w is not None:
            out.append(Violation("ultrametric", metric, w))
    return out


def validate(space: FiniteBimetricSpace, rtol: float = AXIOM_RTOL) -> ValidationReport:
    """Check both matrices are metrics (and rho2 an ultrametric if claimed).

    Each violated axiom is reported once with its first witness: a point for
    ``zero_diagonal``, a pair for ``positivity``/``symmetry`` and a triple
    ``(x, y, z)`` with ``rho[x][z]`` too large for ``triangle``/``ultrametric``.
    """
    if not isinstance(space, FiniteBimetricSpace):
        raise StructuralError("validate expects a FiniteBimetricSpace")
    out = _metric_violations(space.rho1, 1, False, rtol)
    if not space.same_metric:
        out += _metric_violations(space.rho2, 2, space.ultrametric2, rtol)
    elif space.ultrametric2:
        out += [v for v in _metric_violations(space.rho1, 2, True, rtol) if v.axiom == "ultrametric"]
    return ValidationReport(tuple(out))


def _point(space, x):
    if not 0 <= int(x) < space.n:
        raise DomainError(f"point {x} out of range for {space.n} points")
    return int(x)


def ball(space: FiniteBimetricSpace, metric: int, center: int, r: float) -> np.ndarray:
    """Closed ball ``{y : rho_m(center, y) <= r}`` as ascending point ids."""
    if r < 0:
        raise DomainError("radius must be nonnegative")
    c = _point(space, center)
    return np.flatnonzero(space.rho(metric)[c] <= r)


def diameter(space: FiniteBimetricSpace, metric: int, subset) -> float:
    idx = np.asarray(list(subset) if isinstance(subset, (set, frozenset)) else subset, dtype=np.intp)
    if idx.size == 0:
        raise DomainError("diameter of an empty set")
    D = space.rho(metric)
    return float(D[np.ix_(idx, idx)].max())


@dataclass(frozen=True)
class DistanceSpectrum:
    metric: int
    values: tuple

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def spectrum_values(D, rtol=0.0) -> np.ndarray:
    vals = np.unique(D[D > 0])
    if rtol <= 0 or vals.size < 2:
        return vals
    keep = [vals[0]]
    for v in vals[1:]:
        if v > keep[-1] * (1.0 + rtol):
            keep.append(v)
    return np.asarray(keep)


def distance_spectrum(space: FiniteBimetricSpace, metric: int, rtol: float = 1e-12) -> DistanceSpectrum:
    """Sorted distinct positive distances of one metric.

    Values within relative ``rtol`` of the previous kept value are merged into
    it (the smallest representative survives).  ``rtol=0`` keeps exact bits.
    """
    vals = spectrum_values(space.rho(metric), rtol)
    return DistanceSpectrum(metric, tuple(float(v) for v in vals))
