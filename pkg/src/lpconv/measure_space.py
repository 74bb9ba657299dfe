"""Finite atomic measure spaces and the L^p machinery on them.

A :class:`MeasureSpace` is a vector of positive atom weights; an
:class:`LpFunction` is a complex value per atom.  Integrals are weighted sums.
Pairings never conjugate: ``pairing(u, w) = sum(mu * u * w)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import PreconditionError, StructuralError
from .scalar_core import Exponents, as_exponents

MAX_ATOMS = 10**6

#: Tolerances: algebraic identities vs. quantities that went through a p-th root.
ALGEBRAIC_TOL = 1e-12
NORMALIZED_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """Atoms with strictly positive finite weights ``mu({omega_i})``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size < 1 or w.size > MAX_ATOMS:
            raise StructuralError(f"atom count {w.size} outside [1, {MAX_ATOMS}]")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise StructuralError("atom weights must be finite and strictly positive")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n_atoms(self) -> int:
        return self.weights.size

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def is_probability(self, tol: float = NORMALIZED_TOL) -> bool:
        return abs(self.total_mass - 1.0) <= tol

    @classmethod
    def uniform(cls, n: int, probability: bool = True) -> "MeasureSpace":
        return cls(np.full(n, 1.0 / n if probability else 1.0))

    def function(self, values) -> "LpFunction":
        return LpFunction(self, values)

    def constant(self, c=1.0) -> "LpFunction":
        return LpFunction(self, np.full(self.n_atoms, c, dtype=complex))

    def indicator(self, k: int) -> "LpFunction":
        vals = np.zeros(self.n_atoms, dtype=complex)
        vals[k] = 1.0
        return LpFunction(self, vals)

    def same_as(self, other: "MeasureSpace") -> bool:
        return self is other or (
            self.n_atoms == other.n_atoms and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class LpFunction:
    """Complex values on the atoms of ``space``."""

    space: MeasureSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).reshape(-1)
        if v.size != self.space.n_atoms:
            raise StructuralError(
                f"{v.size} values for a space with {self.space.n_atoms} atoms"
            )
        if not np.all(np.isfinite(v)):
            raise StructuralError("function values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def _other(self, other):
        if isinstance(other, LpFunction):
            _check_same(self, other)
            return other.values
        return other

    def __add__(self, other):
        return LpFunction(self.space, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return LpFunction(self.space, self.values - self._other(other))

    def __rsub__(self, other):
        return LpFunction(self.space, self._other(other) - self.values)

    def __mul__(self, other):
        return LpFunction(self.space, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return LpFunction(self.space, self.values / scalar)

    def __neg__(self):
        return LpFunction(self.space, -self.values)

    def conj(self) -> "LpFunction":
        return LpFunction(self.space, np.conj(self.values))

    def to_dict(self) -> dict:
        return function_to_dict(self)


def _check_same(u: LpFunction, w: LpFunction):
    if not u.space.same_as(w.space):
        raise StructuralError("functions live on different measure spaces")


@dataclass(frozen=True, eq=False)
class InducedMeasure:
    """The measure ``density * mu`` on the atoms of ``base``."""

    base: MeasureSpace
    densities: np.ndarray = field(repr=False)

    @property
    def atom_masses(self) -> np.ndarray:
        return self.base.weights * self.densities

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.atom_masses))

    @property
    def support(self) -> np.ndarray:
        return self.densities > 0

    def support_space(self) -> MeasureSpace:
        """The induced measure restricted to its support, as a MeasureSpace."""
        return MeasureSpace(self.atom_masses[self.support])


# -- norms and pairings ------------------------------------------------------


def lp_power(f: LpFunction, e) -> float:
    """``sum(mu * |f|^p)``, the p-th power of the norm with no root taken."""
    e = as_exponents(e)
    return float(np.sum(f.space.weights * np.abs(f.values) ** e.p))


def lp_norm(f: LpFunction, e) -> float:
    """``(sum(mu * |f|^p))^(1/p)``."""
    e = as_exponents(e)
    return lp_power(f, e) ** (1.0 / e.p)


def lq_norm(f: LpFunction, e) -> float:
    """Norm in the dual exponent q of ``e``."""
    e = as_exponents(e)
    return float(np.sum(f.space.weights * np.abs(f.values) ** e.q)) ** (1.0 / e.q)


def pairing(u: LpFunction, w: LpFunction) -> complex:
    """``sum(mu * u * w)`` with no complex conjugation."""
    _check_same(u, w)
    return complex(np.sum(u.space.weights * u.values * w.values))


def _signed_power(values: np.ndarray, power: float) -> np.ndarray:
    # |v|^power * conj(v)/|v|, with sgn(0) = 0
    mag = np.abs(values)
    out = np.zeros_like(values, dtype=complex)
    nz = mag > 0
    out[nz] = mag[nz] ** power * np.conj(values[nz]) / mag[nz]
    return out


def norming_witness(v: LpFunction, e) -> LpFunction:
    """The unique w with ``v w = |v|^p = |w|^q`` for a unit vector v in L^p.

    Raises
    ------
    PreconditionError
        If ``||v||_p`` is not 1 to within 1e-9.
    """
    e = as_exponents(e)
    norm = lp_norm(v, e)
    if abs(norm - 1.0) > NORMALIZED_TOL:
        raise PreconditionError(f"norming_witness needs ||v||_p = 1, got {norm!r}")
    return LpFunction(v.space, _signed_power(v.values, e.p - 1.0))


def dual_witness(w: LpFunction, e) -> LpFunction:
    """The v with ``v w = |v|^p = |w|^q`` for a unit w in L^q."""
    e = as_exponents(e)
    return norming_witness(w, e.swapped())


def holder_gap(u: LpFunction, w: LpFunction, e) -> float:
    """``||u||_p ||w||_q - Re pairing(u, w)``; zero exactly on Hölder's equality set."""
    e = as_exponents(e)
    nu, nw = lp_norm(u, e), lq_norm(w, e)
    if nu > 1 + NORMALIZED_TOL or nw > 1 + NORMALIZED_TOL:
        raise PreconditionError(f"holder_gap expects norms <= 1, got {nu!r}, {nw!r}")
    return nu * nw - pairing(u, w).real


def phase_reduction(u: LpFunction, v: LpFunction, w: LpFunction):
    """Rotate (u, v, w) atomwise so that v and w become nonnegative.

    u and v are multiplied by a unimodular theta, w is divided by it.  All
    norms and the real pairings ``Re(u w)``, ``Re(v w)`` are unchanged.
    """
    _check_same(u, v)
    _check_same(v, w)
    vw = v.values * w.values
    # vw = |v|^p is assumed; only its phase matters here, so check vw is real >= 0
    scale = np.maximum(1.0, np.abs(vw))
    if np.any(np.abs(vw.imag) > 1e-9 * scale) or np.any(vw.real < -1e-9 * scale):
        bad = int(np.argmax(np.abs(vw.imag) + np.maximum(-vw.real, 0)))
        raise PreconditionError(f"v w is not a nonnegative real at atom {bad}")
    mag = np.abs(v.values)
    theta = np.ones_like(v.values)
    nz = mag > 0
    theta[nz] = np.conj(v.values[nz]) / mag[nz]
    # on {v = 0} w should vanish too; rotate w anyway so w' >= 0 stays total
    wz = (~nz) & (np.abs(w.values) > 0)
    theta[wz] = w.values[wz] / np.abs(w.values[wz])
    v2 = np.where(nz, mag, 0.0).astype(complex)
    w2 = w.values / theta
    w2 = np.where(np.abs(w2.imag) <= 1e-15 * np.abs(w2), w2.real, w2)
    return (
        LpFunction(u.space, u.values * theta),
        LpFunction(v.space, v2),
        LpFunction(w.space, w2),
    )


def _check_nonnegative(v: LpFunction, name: str = "v"):
    vals = v.values
    scale = np.maximum(1.0, np.abs(vals))
    bad = (np.abs(vals.imag) > ALGEBRAIC_TOL * scale) | (vals.real < -ALGEBRAIC_TOL * scale)
    if np.any(bad):
        raise PreconditionError(f"{name} must be >= 0 atomwise; atom {int(np.argmax(bad))} is not")


def quotient_z(u: LpFunction, v: LpFunction) -> LpFunction:
    """z = u/v where v > 0 and z = 0 where v = 0.  Call after phase_reduction."""
    _check_same(u, v)
    _check_nonnegative(v)
    vr = v.values.real
    z = np.zeros_like(u.values)
    pos = vr > 0
    z[pos] = u.values[pos] / vr[pos]
    return LpFunction(u.space, z)


def disjoint_split_check(u: LpFunction, z: LpFunction, v: LpFunction, e) -> float:
    """Defect in ``||u||^p = ||u - zv||^p + ||zv||^p``.

    u - zv and zv have disjoint supports, so the defect is rounding only.
    """
    zv = z * v
    return abs(lp_power(u, e) - lp_power(u - zv, e) - lp_power(zv, e))


def induce_probability(v: LpFunction, w: LpFunction, e) -> InducedMeasure:
    """The probability measure ``d nu = v w d mu = v^p d mu = w^q d mu``."""
    e = as_exponents(e)
    _check_same(v, w)
    _check_nonnegative(v, "v")
    _check_nonnegative(w, "w")
    norm = lp_norm(v, e)
    if abs(norm - 1.0) > NORMALIZED_TOL:
        raise PreconditionError(f"induce_probability needs ||v||_p = 1, got {norm!r}")
    vr, wr = v.values.real, w.values.real
    d_vw = vr * wr
    d_vp = vr ** e.p
    d_wq = wr ** e.q
    scale = np.maximum(1.0, d_vp)
    off = np.maximum(np.abs(d_vw - d_vp), np.abs(d_wq - d_vp)) > ALGEBRAIC_TOL * scale
    if np.any(off):
        k = int(np.argmax(off))
        raise PreconditionError(f"w is not the norming witness of v at atom {k}")
    return InducedMeasure(v.space, d_vp)


# -- JSON --------------------------------------------------------------------


def function_to_dict(f: LpFunction) -> dict:
    return {
        "weights": [float(x) for x in f.space.weights],
        "values": [[float(z.real), float(z.imag)] for z in f.values],
    }


def function_from_dict(doc: dict, space: MeasureSpace | None = None) -> LpFunction:
    """Inverse of :func:`function_to_dict`.  Real-valued entries are accepted."""
    if space is None:
        space = MeasureSpace(doc["weights"])
    vals = []
    for item in doc["values"]:
        if isinstance(item, (list, tuple)):
            re, im = item
            vals.append(complex(re, im))
        else:
            vals.append(complex(item))
    return LpFunction(space, vals)


def dumps_function(f: LpFunction) -> str:
    return json.dumps(function_to_dict(f))


def loads_function(text: str) -> LpFunction:
    return function_from_dict(json.loads(text))


__all__ = [
    "Exponents",
    "MeasureSpace",
    "LpFunction",
    "InducedMeasure",
    "lp_norm",
    "lp_power",
    "lq_norm",
    "pairing",
    "norming_witness",
    "dual_witness",
    "holder_gap",
    "phase_reduction",
    "quotient_z",
    "disjoint_split_check",
    "induce_probability",
    "function_to_dict",
    "function_from_dict",
]
