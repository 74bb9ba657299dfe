"""The comparison constant alpha(eps, p) and the delta budgets built on it.

alpha(eps, p) is the smallest factor with ``|u-1|^p <= alpha * f(u)`` on
``|u - 1| >= eps``, where ``f(u) = |u|^p - 1 + p(1 - Re u)``.  It is found
numerically on the polar chart ``u = 1 + r e^{i theta}``; conjugate symmetry
lets theta run over [0, pi] only.  The grid is log-spaced in r because for
p < 2 the supremum sits at ``r = eps`` and the ratio blows up like
``r^(p-2)`` there.

The budgets turn alpha into explicit deltas:

* Lemma1 (probability spaces, the functional 1): ``||z||_p <= 1`` and
  ``Re int z > 1 - delta`` force ``||z - 1||_p < eps``.
* Lemma2 (general unit functional w): ``||u||_p <= 1``, ``||w||_q = 1`` and
  ``Re int uw > 1 - delta`` force ``||u - v||_p < eps``.
* Theorem: unit x, y with ``||x + y||_p > 2 - delta`` force ``||x - y||_p < eps``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .exceptions import DomainError, NumericError
from .scalar_core import Exponents, as_exponents, polar_ratio
from .search_engine import grid_refine

DEFAULT_GRID = (2048, 1024)
DEFAULT_REFINE = 64
DEFAULT_SAFETY = 1.05
TAIL_MULTIPLES = (1.0, 2.0, 5.0, 10.0)
TAIL_ANGLES = 256

STATEMENTS = ("Lemma1", "Lemma2", "Theorem")


@dataclass(frozen=True)
class AlphaCertificate:
    """A numerically determined alpha with the data needed to audit it."""

    epsilon: float
    exponents: Exponents
    alpha: float
    argmax_point: complex
    grid_resolution: tuple
    refine_steps: int
    tail_radius: float
    tail_max_ratio: float
    safety_factor: float
    grid_max_ratio: float

    @property
    def supremum(self) -> float:
        """The estimated supremum before the safety factor."""
        return max(self.grid_max_ratio, self.tail_max_ratio)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "p": self.exponents.p,
            "q": self.exponents.q,
            "alpha": self.alpha,
            "argmax_point": [self.argmax_point.real, self.argmax_point.imag],
            "grid_resolution": list(self.grid_resolution),
            "refine_steps": self.refine_steps,
            "tail_radius": self.tail_radius,
            "tail_max_ratio": self.tail_max_ratio,
            "grid_max_ratio": self.grid_max_ratio,
            "safety_factor": self.safety_factor,
        }


def tail_radius(epsilon: float) -> float:
    return max(10.0, 1.0 + 10.0 * epsilon)


def _point(r, theta) -> complex:
    return complex(1.0 + r * math.cos(theta), r * math.sin(theta))


@lru_cache(maxsize=512)
def _alpha_cached(epsilon, p, q, grid, refine_steps, safety_factor):
    R = tail_radius(epsilon)

    def chart(log_r, theta):
        return polar_ratio(np.exp(log_r), theta, p)

    bounds = ((math.log(epsilon), math.log(R)), (0.0, math.pi))
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            gmax, (lr, th), _ = grid_refine(chart, bounds, grid, refine_steps)
    except FloatingPointError as exc:
        lr, th = exc.args[0]
        u = _point(math.exp(lr), th)
        raise NumericError(f"non-finite comparison ratio at u = {u!r} (p={p})") from None
    radii = R * np.asarray(TAIL_MULTIPLES)
    angles = np.linspace(0.0, math.pi, TAIL_ANGLES)
    with np.errstate(over="ignore", invalid="ignore"):
        tail = polar_ratio(radii[:, None], angles[None, :], p)
    if not np.all(np.isfinite(tail)):
        i, j = np.argwhere(~np.isfinite(tail))[0]
        u = _point(radii[i], angles[j])
        raise NumericError(f"non-finite comparison ratio at u = {u!r} (p={p})")
    k = int(np.argmax(tail))
    tmax = float(tail.flat[k])
    if tmax > gmax:
        arg = _point(radii[k // TAIL_ANGLES], angles[k % TAIL_ANGLES])
    else:
        arg = _point(math.exp(lr), th)
    return AlphaCertificate(
        epsilon=epsilon,
        exponents=Exponents(p, q),
        alpha=safety_factor * max(gmax, tmax),
        argmax_point=arg,
        grid_resolution=tuple(grid),
        refine_steps=refine_steps,
        tail_radius=R,
        tail_max_ratio=tmax,
        safety_factor=safety_factor,
        grid_max_ratio=gmax,
    )


def compute_alpha(
    epsilon: float,
    e,
    grid=DEFAULT_GRID,
    refine_steps: int = DEFAULT_REFINE,
    safety_factor: float = DEFAULT_SAFETY,
) -> AlphaCertificate:
    """Estimate alpha(eps, p) = sup{|u-1|^p / f(u) : |u-1| >= eps}.

    The annulus ``eps <= r <= R`` (``R = max(10, 1 + 10 eps)``) is scanned on
    a ``grid`` of (log r, theta) points and refined around the best cell; the
    far field is sampled on radii ``R, 2R, 5R, 10R``.  The result is the
    larger of the two maxima times ``safety_factor``.  This is a
    high-confidence estimate, not a rigorous enclosure.

    Raises
    ------
    DomainError
        If ``epsilon`` is outside (0, 4] or the safety factor is below 1.
    NumericError
        If the ratio is non-finite somewhere on the chart.
    """
    e = as_exponents(e)
    epsilon = float(epsilon)
    if not (0.0 < epsilon <= 4.0) or not math.isfinite(epsilon):
        raise DomainError(f"epsilon={epsilon!r} outside (0, 4]")
    if not safety_factor >= 1.0:
        raise DomainError(f"safety_factor={safety_factor!r} must be >= 1")
    grid = (int(grid[0]), int(grid[1]))
    if min(grid) < 2:
        raise DomainError("grid resolution must be at least 2 x 2")
    return _alpha_cached(epsilon, e.p, e.q, grid, int(refine_steps), float(safety_factor))


def alpha_table(eps_values, e, **opts) -> list[AlphaCertificate]:
    """Certificates for several epsilons with alpha made nonincreasing in epsilon.

    Raising alpha is always sound, so each entry takes the running maximum of
    the entries at larger epsilon.
    """
    certs = {float(x): compute_alpha(x, e, **opts) for x in eps_values}
    running = -math.inf
    fixed = {}
    for x in sorted(certs, reverse=True):
        running = max(running, certs[x].alpha)
        fixed[x] = replace(certs[x], alpha=running)
    return [fixed[float(x)] for x in eps_values]


# -- budgets -------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityBudget:
    """An (epsilon, delta) pair for one statement, with every constant used.

    ``chain`` is a tuple of ``(name, value)`` pairs; nested budgets appear
    with a dotted prefix (``lemma1.alpha``).  :func:`replay_chain` recomputes
    ``delta`` from it.
    """

    statement: str
    epsilon: float
    delta: float
    chain: tuple
    exponents: Exponents

    def value(self, name: str) -> float:
        for key, val in self.chain:
            if key == name:
                return val
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "statement": self.statement,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "p": self.exponents.p,
            "chain": [[k, v] for k, v in self.chain],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ConvexityBudget":
        return cls(
            statement=doc["statement"],
            epsilon=float(doc["epsilon"]),
            delta=float(doc["delta"]),
            chain=tuple((str(k), float(v)) for k, v in doc["chain"]),
            exponents=Exponents.from_p(doc["p"]),
        )


AlphaSource = Callable[[float], float]


def _alpha_source(alpha, e, opts) -> AlphaSource:
    if alpha is None:
        return lambda eps: compute_alpha(eps, e, **opts).alpha
    if callable(alpha):
        return alpha
    return lambda eps: float(alpha)


def _check_eps(epsilon, hi, closed):
    epsilon = float(epsilon)
    ok = 0.0 < epsilon <= hi if closed else 0.0 < epsilon < hi
    if not ok or not math.isfinite(epsilon):
        bracket = "]" if closed else ")"
        raise DomainError(f"epsilon={epsilon!r} outside (0, {hi:g}{bracket}")
    return epsilon


def _prefixed(prefix, chain):
    return tuple((f"{prefix}.{k}", v) for k, v in chain)


def _lemma1_delta(eps_prime, p, a):
    return eps_prime ** p / (p * a)


def _lemma2_delta2(epsilon, p):
    # 1 - (1 - delta)^p <= eps^p / 2; vacuous (any delta < 1) once eps^p/2 >= 1
    half = epsilon ** p / 2.0
    return -math.expm1(math.log1p(-half) / p) if half < 1.0 else 1.0


def delta_lemma1(epsilon: float, e, alpha=None, **alpha_opts) -> ConvexityBudget:
    """delta for Lemma1 at the requested epsilon.

    The direct estimate ``delta = eps^p / (p alpha)`` only yields
    ``||z - 1||_p < 2^(1/p) eps``, so alpha is taken at
    ``eps' = eps 2^(-1/p)`` and ``delta = eps'^p / (p alpha(eps'))``.

    ``alpha`` may be a number or a callable ``eps' -> alpha`` to reuse
    precomputed values; by default :func:`compute_alpha` is called with
    ``alpha_opts``.
    """
    e = as_exponents(e)
    epsilon = _check_eps(epsilon, 2.0, closed=False)
    p = e.p
    eps_prime = epsilon * 2.0 ** (-1.0 / p)
    a = float(_alpha_source(alpha, e, alpha_opts)(eps_prime))
    delta = _lemma1_delta(eps_prime, p, a)
    if not (0.0 < delta < 1.0):
        raise NumericError(f"Lemma1 delta={delta!r} outside (0, 1) at eps={epsilon}, p={p}")
    chain = (
        ("p", p),
        ("epsilon", epsilon),
        ("epsilon_prime", eps_prime),
        ("alpha", a),
        ("delta", delta),
    )
    return ConvexityBudget("Lemma1", epsilon, delta, chain, e)


def delta_lemma2(epsilon: float, e, alpha=None, **alpha_opts) -> ConvexityBudget:
    """delta for Lemma2: the smaller of a Lemma1 delta and a mass-off-support delta.

    With ``eps_1 = eps 2^(-1/p)``, Lemma1 at ``eps_1`` bounds the part of
    ``||u - v||_p^p`` on ``{v != 0}`` by ``eps^p / 2``, and
    ``delta_2 = 1 - (1 - eps^p/2)^(1/p)`` bounds the part on ``{v = 0}``,
    which is below ``1 - (1 - delta)^p``, by the same amount.
    """
    e = as_exponents(e)
    epsilon = _check_eps(epsilon, 2.0, closed=False)
    p = e.p
    eps1 = epsilon * 2.0 ** (-1.0 / p)
    inner = delta_lemma1(eps1, e, alpha=alpha, **alpha_opts)
    d2 = _lemma2_delta2(epsilon, p)
    delta = min(inner.delta, d2)
    if not (0.0 < delta < 1.0):
        raise NumericError(f"Lemma2 delta={delta!r} outside (0, 1) at eps={epsilon}, p={p}")
    chain = (
        (("p", p), ("epsilon", epsilon), ("epsilon_1", eps1))
        + _prefixed("lemma1", inner.chain)
        + (("delta_1", inner.delta), ("delta_2", d2), ("delta", delta))
    )
    return ConvexityBudget("Lemma2", epsilon, delta, chain, e)


def delta_theorem(epsilon: float, e, alpha=None, **alpha_opts) -> ConvexityBudget:
    """delta for the uniform convexity statement: Lemma2's delta at eps/2.

    Both x and y land within eps/2 of the normalized midpoint, so
    ``||x - y||_p < eps``.
    """
    e = as_exponents(e)
    epsilon = _check_eps(epsilon, 2.0, closed=True)
    half = epsilon / 2.0
    inner = delta_lemma2(half, e, alpha=alpha, **alpha_opts)
    chain = (
        (("p", e.p), ("epsilon", epsilon), ("epsilon_half", half))
        + _prefixed("lemma2", inner.chain)
        + (("delta", inner.delta),)
    )
    return ConvexityBudget("Theorem", epsilon, inner.delta, chain, e)


BUDGETS = {"Lemma1": delta_lemma1, "Lemma2": delta_lemma2, "Theorem": delta_theorem}


def budget_for(statement: str, epsilon: float, e, **kw) -> ConvexityBudget:
    try:
        fn = BUDGETS[normalize_statement(statement)]
    except KeyError:
        raise DomainError(f"unknown statement {statement!r}") from None
    return fn(epsilon, e, **kw)


def normalize_statement(name: str) -> str:
    key = str(name).strip().lower()
    for s in STATEMENTS:
        if s.lower() == key:
            return s
    raise DomainError(f"unknown statement {name!r}; expected one of {STATEMENTS}")


def _sub(chain, prefix):
    n = len(prefix) + 1
    return tuple((k[n:], v) for k, v in chain if k.startswith(prefix + "."))


def _replay(statement, chain):
    d = dict(chain)
    p = d["p"]
    if statement == "Lemma1":
        return _lemma1_delta(d["epsilon_prime"], p, d["alpha"])
    if statement == "Lemma2":
        d1 = _replay("Lemma1", _sub(chain, "lemma1"))
        return min(d1, _lemma2_delta2(d["epsilon"], p))
    if statement == "Theorem":
        return _replay("Lemma2", _sub(chain, "lemma2"))
    raise DomainError(f"unknown statement {statement!r}")


def replay_chain(budget: ConvexityBudget) -> float:
    """Recompute delta from the recorded chain alone."""
    return _replay(budget.statement, budget.chain)


def alpha_epsilon(statement: str, epsilon: float, p: float) -> float:
    """The epsilon at which a budget for ``statement`` consults alpha."""
    statement = normalize_statement(statement)
    if statement == "Theorem":
        epsilon = epsilon / 2.0
    if statement in ("Lemma2", "Theorem"):
        epsilon = epsilon * 2.0 ** (-1.0 / p)
    return epsilon * 2.0 ** (-1.0 / p)


def budget_table(statement: str, e, eps_values, **alpha_opts) -> list[ConvexityBudget]:
    """Budgets over an epsilon grid, sharing one monotone alpha table.

    alpha is made nonincreasing in its argument first, which makes delta
    nondecreasing in epsilon down the table.
    """
    e = as_exponents(e)
    statement = normalize_statement(statement)
    needed = [alpha_epsilon(statement, x, e.p) for x in eps_values]
    certs = alpha_table(needed, e, **alpha_opts)
    lookup = {x: c.alpha for x, c in zip(needed, certs)}
    return [
        budget_for(statement, x, e, alpha=lambda a, _l=lookup: _l[a]) for x in eps_values
    ]
