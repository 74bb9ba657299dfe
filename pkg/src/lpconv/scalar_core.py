"""Scalar layer: conjugate exponents, the Young gap and the normalized gap.

All functions accept Python scalars or numpy arrays (complex or real) and
broadcast like numpy ufuncs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, SingularityError

P_MIN = 1.001
P_MAX = 64.0

#: ``|u - 1|`` below this is treated as the removable singularity at u = 1.
SINGULAR_RADIUS = 1e-14


def _check_p(p: float) -> float:
    p = float(p)
    if not np.isfinite(p) or not (P_MIN <= p <= P_MAX):
        raise DomainError(f"exponent p={p!r} outside accepted interval [{P_MIN}, {P_MAX}]")
    return p


def conjugate_exponent(p: float) -> float:
    """Return q with 1/p + 1/q = 1 for p in ``[P_MIN, P_MAX]``.

    The map is an involution wherever q lands back inside the band, i.e. for
    p in ``[P_MAX/(P_MAX-1), P_MAX]``.
    """
    p = _check_p(p)
    return p / (p - 1.0)


@dataclass(frozen=True)
class Exponents:
    """A conjugate pair (p, q)."""

    p: float
    q: float

    def __post_init__(self):
        _check_p(self.p)
        if not np.isfinite(self.q) or self.q <= 1.0:
            raise DomainError(f"conjugate exponent q={self.q!r} must be finite and > 1")
        if abs(1.0 / self.p + 1.0 / self.q - 1.0) > 1e-12:
            raise DomainError(f"1/p + 1/q != 1 for p={self.p}, q={self.q}")

    @classmethod
    def from_p(cls, p: float) -> "Exponents":
        p = _check_p(p)
        return cls(p, conjugate_exponent(p))

    def swapped(self) -> "Exponents":
        """The pair (q, p), skipping the range clamp on the first slot."""
        obj = object.__new__(Exponents)
        object.__setattr__(obj, "p", self.q)
        object.__setattr__(obj, "q", self.p)
        return obj


def as_exponents(e) -> Exponents:
    """Coerce a bare p or an :class:`Exponents` into an :class:`Exponents`."""
    if isinstance(e, Exponents):
        return e
    return Exponents.from_p(e)


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError("non-finite scalar argument")


def young_gap(u, v, e):
    """``|u|^p/p + |v|^q/q - Re(uv)``, nonnegative by Young's inequality."""
    e = as_exponents(e)
    u = np.asarray(u)
    v = np.asarray(v)
    _finite(u, v)
    gap = np.abs(u) ** e.p / e.p + np.abs(v) ** e.q / e.q - np.real(u * v)
    return gap if gap.ndim else float(gap)


def young_equality_holds(u, v, e, tol: float = 1e-9):
    """True where (u, v) sits on the equality set of Young's inequality.

    That set is ``uv >= 0`` together with ``|u|^p = |v|^q``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    e = as_exponents(e)
    u = np.asarray(u)
    v = np.asarray(v)
    _finite(u, v)
    uv = u * v
    ok = (
        (np.abs(np.imag(uv)) <= tol)
        & (np.real(uv) >= -tol)
        & (np.abs(np.abs(u) ** e.p - np.abs(v) ** e.q) <= tol)
    )
    return ok if ok.ndim else bool(ok)


def normalized_gap(u, e):
    """f(u) = |u|^p - 1 + p(1 - Re u), i.e. p times the Young gap against v = 1."""
    e = as_exponents(e)
    u = np.asarray(u)
    _finite(u)
    f = np.abs(u) ** e.p - 1.0 + e.p * (1.0 - np.real(u))
    return f if f.ndim else float(f)


def comparison_ratio(u, e):
    """``|u - 1|^p / f(u)``; the supremum of this over ``|u-1| >= eps`` is alpha."""
    e = as_exponents(e)
    u = np.asarray(u)
    _finite(u)
    dist = np.abs(u - 1.0)
    if np.any(dist < SINGULAR_RADIUS):
        raise SingularityError("comparison_ratio is singular at u = 1")
    ratio = dist ** e.p / normalized_gap(u, e)
    return ratio if np.ndim(ratio) else float(ratio)


def polar_ratio(r, theta, p: float):
    """comparison_ratio at u = 1 + r e^{i theta}, evaluated without cancellation.

    Uses ``|u|^2 - 1 = r (2 cos theta + r)`` so that f stays accurate for
    small r, where the generic formula loses digits.
    """
    r = np.asarray(r, dtype=float)
    c = np.cos(theta)
    with np.errstate(divide="ignore"):
        # log1p(-1) = -inf at u = 0, and expm1(-inf) = -1 is the right limit
        f = np.expm1(0.5 * p * np.log1p(r * (2.0 * c + r))) - p * (r * c)
    return r ** p / f
