"""Slices of the unit ball, instance checks and adversarial verification.

Every ``verify_*_instance`` function takes one concrete instance and returns a
:class:`VerificationReport` whose ``status`` is ``"pass"``, ``"fail"`` or
``"not-applicable"`` (the instance is outside the statement's hypotheses).
:func:`adversarial_verify` searches for the instance that pushes the measured
quantity closest to its bound and reports on that worst witness.

The search works on flat real parameter vectors.  Atom weights enter as
softmax logits, so the searched spaces are probability spaces; for Lemma2 and
the theorem this is no loss since rescaling mu only rescales the norms
involved.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .alpha_solver import ConvexityBudget, budget_for, normalize_statement
from .exceptions import DomainError, PreconditionError, StructuralError
from .measure_space import (
    NORMALIZED_TOL,
    LpFunction,
    MeasureSpace,
    _check_same,
    dual_witness,
    function_from_dict,
    function_to_dict,
    induce_probability,
    lp_norm,
    lp_power,
    lq_norm,
    norming_witness,
    pairing,
    phase_reduction,
    quotient_z,
)
from .scalar_core import Exponents, as_exponents
from .search_engine import (
    DIAMETER_OPTIONS,
    FeasibleSet,
    SearchOptions,
    maximize,
    random_complex,
    random_weights,
)

BALL_TOL = 1e-12
#: Interior margin used when repairing candidates into a strict hypothesis.
REPAIR_MARGIN = 1e-12

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "not-applicable"


@dataclass(frozen=True, eq=False)
class SliceSpec:
    """The slice ``{x : ||x||_p <= 1, Re pairing(x, phi) > 1 - delta}``.

    ``delta <= 0`` is accepted and describes the empty slice.
    """

    functional: LpFunction
    delta: float
    exponents: Exponents

    def __post_init__(self):
        e = as_exponents(self.exponents)
        object.__setattr__(self, "exponents", e)
        norm = lq_norm(self.functional, e)
        if abs(norm - 1.0) > NORMALIZED_TOL:
            raise PreconditionError(f"slice functional needs ||phi||_q = 1, got {norm!r}")
        if not math.isfinite(self.delta) or self.delta > 2.0:
            raise DomainError(f"slice delta={self.delta!r} must be finite and <= 2")

    @property
    def is_empty(self) -> bool:
        return self.delta <= 0

    @property
    def center(self) -> LpFunction:
        """The unique unit vector on which phi attains 1."""
        return dual_witness(self.functional, self.exponents)


def slice_contains(s: SliceSpec, x: LpFunction) -> bool:
    _check_same(x, s.functional)
    return (
        lp_norm(x, s.exponents) <= 1.0 + BALL_TOL
        and pairing(x, s.functional).real > 1.0 - s.delta
    )


def split_trick(x: LpFunction, y: LpFunction, s: SliceSpec):
    """Membership of x and y in the slice when ``Re phi(x + y) > 2 - delta``.

    From ``Re phi(y) <= 1`` it follows that ``Re phi(x) > 1 - delta``, and
    likewise for y.  Returns ``(False, False)`` when the hypothesis does not
    hold; otherwise the two membership flags as actually checked.
    """
    _check_same(x, y)
    _check_same(x, s.functional)
    if pairing(x + y, s.functional).real > 2.0 - s.delta:
        return slice_contains(s, x), slice_contains(s, y)
    return False, False


# -- reports -------------------------------------------------------------------


@dataclass
class VerificationReport:
    """Outcome of checking one instance (or the worst one a search found)."""

    statement: str
    budget: ConvexityBudget
    instance_summary: str
    measured_quantity: float | None
    bound: float
    margin: float | None
    passed: bool
    witness: dict | None = None
    evaluations: int = 0
    seed: int | None = None
    status: str = PASS
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "statement": self.statement,
            "status": self.status,
            "passed": self.passed,
            "measured_quantity": self.measured_quantity,
            "bound": self.bound,
            "margin": self.margin,
            "instance_summary": self.instance_summary,
            "details": self.details,
            "budget": self.budget.to_dict(),
            "evaluations": self.evaluations,
            "seed": self.seed,
            "witness": self.witness,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _report(statement, budget, summary, measured, bound, witness, details=None):
    margin = bound - measured
    return VerificationReport(
        statement=statement,
        budget=budget,
        instance_summary=summary,
        measured_quantity=float(measured),
        bound=float(bound),
        margin=float(margin),
        passed=bool(margin > 0),
        witness=witness,
        status=PASS if margin > 0 else FAIL,
        details=details or {},
    )


def _not_applicable(statement, budget, bound, reason, witness):
    return VerificationReport(
        statement=statement,
        budget=budget,
        instance_summary=f"not applicable: {reason}",
        measured_quantity=None,
        bound=float(bound),
        margin=None,
        passed=False,
        witness=witness,
        status=NOT_APPLICABLE,
    )


def witness_doc(statement: str, **functions: LpFunction) -> dict:
    """Serialize an instance; every function uses the measure-space JSON schema."""
    return {
        "statement": statement,
        "functions": {k: function_to_dict(f) for k, f in functions.items()},
    }


def witness_functions(doc: dict) -> dict:
    """Inverse of :func:`witness_doc`; all functions share the first one's space."""
    funcs = doc["functions"]
    space = None
    out = {}
    for name, f in funcs.items():
        g = function_from_dict(f, space)
        if space is None:
            space = g.space
        elif not np.array_equal(space.weights, np.asarray(f["weights"], dtype=float)):
            raise StructuralError("witness functions live on different spaces")
        out[name] = g
    return out


def _check_budget(budget, statement):
    if budget.statement != statement:
        raise DomainError(f"{statement} check given a {budget.statement} budget")


def verify_lemma1_instance(
    space: MeasureSpace, z: LpFunction, epsilon: float, budget: ConvexityBudget
) -> VerificationReport:
    """Check ``||z - 1||_p < eps`` for z in the Lemma1 hypothesis set."""
    _check_budget(budget, "Lemma1")
    e = budget.exponents
    if not z.space.same_as(space):
        raise StructuralError("z does not live on the given space")
    wit = witness_doc("Lemma1", z=z)
    if not space.is_probability():
        return _not_applicable("Lemma1", budget, epsilon, "weights do not sum to 1", wit)
    nz = lp_norm(z, e)
    if nz > 1.0 + NORMALIZED_TOL:
        return _not_applicable("Lemma1", budget, epsilon, f"||z||_p = {nz!r} > 1", wit)
    mean = pairing(z, space.constant(1.0)).real
    if not mean > 1.0 - budget.delta:
        return _not_applicable("Lemma1", budget, epsilon, "Re int z dnu <= 1 - delta", wit)
    measured = lp_norm(z - 1.0, e)
    summary = f"n={space.n_atoms} atoms, p={e.p:g}, ||z||_p={nz:.12g}, Re int z={mean:.15g}"
    details = {"norm_z": nz, "mean_z": mean}
    return _report("Lemma1", budget, summary, measured, epsilon, wit, details)


def verify_lemma2_instance(
    u: LpFunction, w: LpFunction, epsilon: float, budget: ConvexityBudget
) -> VerificationReport:
    """Check ``||u - v||_p < eps`` where v is the dual vector of w.

    Besides the total, the report's details carry the two pieces bounded
    separately: the mass on ``{v != 0}`` (compared with ``eps_1^p``) and the
    mass on ``{v = 0}`` (compared with ``1 - (1 - delta)^p``), plus the same
    first piece computed the long way, as ``int |z - 1|^p dnu``.
    """
    _check_budget(budget, "Lemma2")
    e = budget.exponents
    _check_same(u, w)
    wit = witness_doc("Lemma2", u=u, w=w)
    nu_ = lp_norm(u, e)
    nw = lq_norm(w, e)
    if nu_ > 1.0 + NORMALIZED_TOL:
        return _not_applicable("Lemma2", budget, epsilon, f"||u||_p = {nu_!r} > 1", wit)
    if abs(nw - 1.0) > NORMALIZED_TOL:
        return _not_applicable("Lemma2", budget, epsilon, f"||w||_q = {nw!r} != 1", wit)
    pr = pairing(u, w).real
    if not pr > 1.0 - budget.delta:
        return _not_applicable("Lemma2", budget, epsilon, "Re int uw <= 1 - delta", wit)
    v = dual_witness(w, e)
    measured = lp_norm(u - v, e)

    p = e.p
    diff = np.abs(u.values - v.values) ** p * u.space.weights
    on = v.values != 0
    on_support = float(np.sum(diff[on]))
    off_support = float(np.sum(diff[~on]))
    # the same split through the change of measure: rotate, divide, induce nu
    u2, v2, w2 = phase_reduction(u, v, w)
    z = quotient_z(u2, v2)
    nu = induce_probability(v2, w2, e)
    nu_integral = float(np.sum(nu.atom_masses * np.abs(z.values - 1.0) ** p))
    off_split = lp_power(u2 - z * v2, e)

    eps1 = budget.value("epsilon_1")
    details = {
        "on_support": on_support,
        "on_support_bound": eps1 ** p,
        "on_support_margin": eps1 ** p - on_support,
        "off_support": off_support,
        "off_support_bound": 1.0 - (1.0 - budget.delta) ** p,
        "off_support_margin": 1.0 - (1.0 - budget.delta) ** p - off_support,
        "nu_integral": nu_integral,
        "off_support_via_split": off_split,
        "pairing": pr,
    }
    summary = (
        f"n={u.space.n_atoms} atoms, p={p:g}, ||u||_p={nu_:.12g}, "
        f"Re int uw={pr:.15g}, atoms with w=0: {int((~on).sum())}"
    )
    return _report("Lemma2", budget, summary, measured, epsilon, wit, details)


def verify_theorem_instance(
    x: LpFunction, y: LpFunction, epsilon: float, budget: ConvexityBudget
) -> VerificationReport:
    """Check ``||x - y||_p < eps`` for unit x, y with ``||x + y||_p > 2 - delta``."""
    _check_budget(budget, "Theorem")
    e = budget.exponents
    _check_same(x, y)
    wit = witness_doc("Theorem", x=x, y=y)
    nx, ny = lp_norm(x, e), lp_norm(y, e)
    if abs(nx - 1.0) > NORMALIZED_TOL or abs(ny - 1.0) > NORMALIZED_TOL:
        return _not_applicable("Theorem", budget, epsilon, f"norms {nx!r}, {ny!r} != 1", wit)
    s = lp_norm(x + y, e)
    if not s > 2.0 - budget.delta:
        return _not_applicable("Theorem", budget, epsilon, "||x + y||_p <= 2 - delta", wit)
    v = (x + y) / s
    w = norming_witness(v, e)
    measured = lp_norm(x - y, e)
    details = {
        "norm_sum": s,
        "dist_x_mid": lp_norm(x - v, e),
        "dist_y_mid": lp_norm(y - v, e),
        "pairing_x": pairing(x, w).real,
        "pairing_y": pairing(y, w).real,
    }
    summary = f"n={x.space.n_atoms} atoms, p={e.p:g}, ||x+y||_p={s:.15g}"
    return _report("Theorem", budget, summary, measured, epsilon, wit, details)


def sub_budget(budget: ConvexityBudget, name: str, statement: str) -> ConvexityBudget:
    """The nested budget recorded in ``budget.chain`` under ``name.``."""
    n = len(name) + 1
    chain = tuple((k[n:], v) for k, v in budget.chain if k.startswith(name + "."))
    d = dict(chain)
    return ConvexityBudget(statement, d["epsilon"], d["delta"], chain, budget.exponents)


def slice_route_passes(x: LpFunction, y: LpFunction, budget: ConvexityBudget) -> bool:
    """Decide the theorem instance via thin slices instead of the midpoint bound.

    phi is the norming functional of the normalized midpoint; the split trick
    places x and y in its delta-slice, and Lemma2 at eps/2 bounds both
    distances to the slice's center.
    """
    e = budget.exponents
    v = (x + y) / lp_norm(x + y, e)
    phi = norming_witness(v, e)
    inner = sub_budget(budget, "lemma2", "Lemma2")
    s = SliceSpec(phi, budget.delta, e)
    in_x, in_y = split_trick(x, y, s)
    if not (in_x and in_y):
        return False
    rx = verify_lemma2_instance(x, phi, inner.epsilon, inner)
    ry = verify_lemma2_instance(y, phi, inner.epsilon, inner)
    return rx.passed and ry.passed


# -- batched encodings used by the searches ---------------------------------------


def _softmax(L):
    L = L - L.max(axis=1, keepdims=True)
    w = np.exp(L)
    return w / w.sum(axis=1, keepdims=True)


def _cplx(X, start, n):
    return X[:, start : start + n] + 1j * X[:, start + n : start + 2 * n]


def _put_cplx(X, start, n, Z):
    X[:, start : start + n] = Z.real
    X[:, start + n : start + 2 * n] = Z.imag


def _norm(mu, F, p):
    return np.sum(mu * np.abs(F) ** p, axis=1) ** (1.0 / p)


def _ball(mu, F, p):
    n = _norm(mu, F, p)
    return F / np.maximum(1.0, n)[:, None]


def _unit(mu, F, p):
    n = _norm(mu, F, p)
    return F / np.where(n > 0, n, 1.0)[:, None]


def _dual(W, q):
    mag = np.abs(W)
    safe = np.where(mag > 0, mag, 1.0)
    return np.where(mag > 0, mag ** (q - 1.0) * np.conj(W) / safe, 0.0)


def _linear_repair(P0, target):
    # smallest t with (1 - t) P0 + t >= target, for a path whose pairing ends at 1
    need = P0 < target
    t = np.where(need, (target - P0) / np.where(need, 1.0 - P0, 1.0), 0.0)
    return np.clip(t, 0.0, 1.0)[:, None]


def _bisect(g, k, iters=80):
    """Per-row bisection on [0, 1] for g(t) >= 0 with g(1) >= 0; returns hi."""
    lo = np.zeros(k)
    hi = np.ones(k)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = g(mid) >= 0
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return hi


class _Lemma1Problem:
    cheap_repair = True

    def __init__(self, n, e, delta):
        self.n, self.p, self.delta = n, e.p, delta
        self.e = e
        self.dim = 3 * n

    def decode(self, X):
        mu = _softmax(X[:, : self.n])
        z = _ball(mu, _cplx(X, self.n, self.n), self.p)
        return mu, z

    def objective(self, X):
        mu, z = self.decode(X)
        return _norm(mu, z - 1.0, self.p)

    def _mean(self, X):
        mu, z = self.decode(X)
        return np.sum(mu * z, axis=1).real

    def violation(self, X):
        return np.maximum(0.0, 1.0 - self.delta - self._mean(X))

    def repair(self, X):
        mu, z = self.decode(X)
        P0 = np.sum(mu * z, axis=1).real
        t = _linear_repair(P0, 1.0 - self.delta + REPAIR_MARGIN)
        X = X.copy()
        _put_cplx(X, self.n, self.n, (1.0 - t) * z + t)
        return X

    def feasible(self, X):
        return self._mean(X) > 1.0 - self.delta

    def sample(self, rng):
        n = self.n
        mu = random_weights(rng, n)
        z = random_complex(rng, n) * rng.uniform(0.0, 1.5)
        return np.concatenate([np.log(mu), z.real, z.imag])

    def instance(self, x):
        mu, z = self.decode(x[None, :])
        space = MeasureSpace(mu[0])
        return {"space": space, "z": LpFunction(space, z[0])}


class _Lemma2Problem:
    cheap_repair = True

    def __init__(self, n, e, delta):
        self.n, self.p, self.q, self.delta = n, e.p, e.q, delta
        self.dim = 6 * n
        self.active = np.r_[np.ones(5 * n), np.zeros(n)]

    def decode(self, X):
        n = self.n
        mu = _softmax(X[:, :n])
        u = _ball(mu, _cplx(X, n, n), self.p)
        mask = X[:, 5 * n : 6 * n] > 0.5
        w = _unit(mu, _cplx(X, 3 * n, n) * mask, self.q)
        return mu, u, w

    def objective(self, X):
        mu, u, w = self.decode(X)
        return _norm(mu, u - _dual(w, self.q), self.p)

    def _pairing(self, X):
        mu, u, w = self.decode(X)
        return np.sum(mu * u * w, axis=1).real

    def violation(self, X):
        return np.maximum(0.0, 1.0 - self.delta - self._pairing(X))

    def repair(self, X):
        mu, u, w = self.decode(X)
        v = _dual(w, self.q)
        P0 = np.sum(mu * u * w, axis=1).real
        t = _linear_repair(P0, 1.0 - self.delta + REPAIR_MARGIN)
        X = X.copy()
        _put_cplx(X, self.n, self.n, (1.0 - t) * u + t * v)
        return X

    def feasible(self, X):
        return self._pairing(X) > 1.0 - self.delta

    def sample(self, rng):
        n = self.n
        mu = random_weights(rng, n)
        u = random_complex(rng, n) * rng.uniform(0.0, 1.5)
        w = random_complex(rng, n)
        mask = (rng.uniform(size=n) > 0.3).astype(float)
        mask[rng.integers(n)] = 1.0
        return np.concatenate([np.log(mu), u.real, u.imag, w.real, w.imag, mask])

    def instance(self, x):
        mu, u, w = self.decode(x[None, :])
        space = MeasureSpace(mu[0])
        return {"u": LpFunction(space, u[0]), "w": LpFunction(space, w[0])}


class _TheoremProblem:
    def __init__(self, n, e, delta):
        self.n, self.p, self.delta = n, e.p, delta
        self.dim = 5 * n

    def decode(self, X):
        n = self.n
        mu = _softmax(X[:, :n])
        x = _unit(mu, _cplx(X, n, n), self.p)
        y = _unit(mu, _cplx(X, 3 * n, n), self.p)
        return mu, x, y

    def objective(self, X):
        mu, x, y = self.decode(X)
        return _norm(mu, x - y, self.p)

    def _sum(self, X):
        mu, x, y = self.decode(X)
        return _norm(mu, x + y, self.p)

    def violation(self, X):
        return np.maximum(0.0, 2.0 - self.delta - self._sum(X))

    def repair(self, X):
        mu, x, y = self.decode(X)
        target = 2.0 - self.delta + REPAIR_MARGIN
        p = self.p

        def y_at(t):
            t = t[:, None]
            return np.where(t < 1.0, _unit(mu, (1.0 - t) * y + t * x, p), x)

        t = _bisect(lambda t: _norm(mu, x + y_at(t), p) - target, X.shape[0])
        t = np.where(_norm(mu, x + y, p) >= target, 0.0, t)
        X = X.copy()
        _put_cplx(X, self.n, self.n, x)
        _put_cplx(X, 3 * self.n, self.n, y_at(t))
        return X

    def feasible(self, X):
        return self._sum(X) > 2.0 - self.delta

    def sample(self, rng):
        n = self.n
        mu = random_weights(rng, n)
        x = random_complex(rng, n)
        y = random_complex(rng, n)
        return np.concatenate([np.log(mu), x.real, x.imag, y.real, y.imag])

    def instance(self, x):
        mu, a, b = self.decode(x[None, :])
        space = MeasureSpace(mu[0])
        return {"x": LpFunction(space, a[0]), "y": LpFunction(space, b[0])}


_PROBLEMS = {"Lemma1": _Lemma1Problem, "Lemma2": _Lemma2Problem, "Theorem": _TheoremProblem}


def _fset(problem) -> FeasibleSet:
    return FeasibleSet(
        dim=problem.dim,
        sample=problem.sample,
        violation=problem.violation,
        repair=problem.repair,
        feasible=getattr(problem, "feasible", None),
        active=getattr(problem, "active", None),
        repair_in_loop=getattr(problem, "cheap_repair", False),
    )


def verify_instance(statement: str, functions: dict, epsilon: float, budget: ConvexityBudget):
    """Dispatch a deserialized witness to the matching ``verify_*_instance``."""
    statement = normalize_statement(statement)
    if statement == "Lemma1":
        z = functions["z"]
        return verify_lemma1_instance(z.space, z, epsilon, budget)
    if statement == "Lemma2":
        return verify_lemma2_instance(functions["u"], functions["w"], epsilon, budget)
    return verify_theorem_instance(functions["x"], functions["y"], epsilon, budget)


def adversarial_verify(
    statement: str,
    e,
    epsilon: float,
    n_atoms: int,
    opts: SearchOptions = SearchOptions(),
    budget: ConvexityBudget | None = None,
    threads: int | None = None,
    **alpha_opts,
) -> VerificationReport:
    """Search the hypothesis set of ``statement`` for the largest measured quantity.

    The report is the instance check of the best witness found; a ``fail``
    status would be a counterexample to the budget.
    """
    statement = normalize_statement(statement)
    e = as_exponents(e)
    if n_atoms < 1:
        raise DomainError("n_atoms must be >= 1")
    if budget is None:
        budget = budget_for(statement, epsilon, e, **alpha_opts)
    problem = _PROBLEMS[statement](int(n_atoms), e, budget.delta)
    result = maximize(problem.objective, _fset(problem), opts, threads=threads)
    if not result.found:
        rep = _not_applicable(statement, budget, epsilon, "no feasible point found", None)
    else:
        inst = problem.instance(result.point)
        if statement == "Lemma1":
            rep = verify_lemma1_instance(inst["space"], inst["z"], epsilon, budget)
        else:
            rep = verify_instance(statement, inst, epsilon, budget)
        rep.instance_summary = (
            f"worst of {opts.restarts} restarts (restart {result.restart}, "
            f"{result.feasible_restarts} feasible): " + rep.instance_summary
        )
    rep.evaluations = result.evaluations
    rep.seed = opts.seed
    return rep


# -- one-sided geometric estimates -------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    """A one-sided numerical estimate; ``side`` says which way it can be off."""

    quantity: str
    value: float
    side: str
    evaluations: int
    seed: int
    note: str = ""
    witness: dict | None = None

    def __float__(self):
        return self.value

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "value": self.value,
            "side": self.side,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "note": self.note,
            "witness": self.witness,
        }


class _SliceProblem:
    """x, y on the unit sphere inside the slice.

    The diameter of a convex set is attained at extreme points, and for
    1 < p < inf those are sphere points, so nothing is lost.  Candidates
    outside the cap are moved along the sphere toward the slice center; the
    objective is then flat (not decreasing) outside the cap, which keeps the
    random-direction climb from stalling at the cap's rim.
    """

    cheap_repair = True

    def __init__(self, s: SliceSpec):
        self.mu = s.functional.space.weights[None, :]
        self.phi = s.functional.values[None, :]
        self.center = s.center.values[None, :]
        self.n = s.functional.space.n_atoms
        self.p = s.exponents.p
        self.delta = s.delta
        self.dim = 4 * self.n

    def decode(self, X):
        x = _unit(self.mu, _cplx(X, 0, self.n), self.p)
        y = _unit(self.mu, _cplx(X, 2 * self.n, self.n), self.p)
        return x, y

    def objective(self, X):
        x, y = self.decode(X)
        return _norm(self.mu, x - y, self.p)

    def _pair(self, f):
        return np.sum(self.mu * f * self.phi, axis=1).real

    def _pairings(self, X):
        x, y = self.decode(X)
        return self._pair(x), self._pair(y)

    def violation(self, X):
        px, py = self._pairings(X)
        lo = 1.0 - self.delta
        return np.maximum(0.0, lo - px) + np.maximum(0.0, lo - py)

    def _onto_cap(self, f, target):
        mu, c, p = self.mu, self.center, self.p

        def at(t):
            t = t[:, None]
            return np.where(t < 1.0, _unit(mu, (1.0 - t) * f + t * c, p), c)

        t = _bisect(lambda t: self._pair(at(t)) - target, f.shape[0], iters=60)
        t = np.where(self._pair(f) >= target, 0.0, t)
        return at(t)

    def repair(self, X):
        x, y = self.decode(X)
        target = 1.0 - self.delta + REPAIR_MARGIN
        out = X.copy()
        _put_cplx(out, 0, self.n, self._onto_cap(x, target))
        _put_cplx(out, 2 * self.n, self.n, self._onto_cap(y, target))
        return out

    def feasible(self, X):
        px, py = self._pairings(X)
        return (px > 1.0 - self.delta) & (py > 1.0 - self.delta)

    def sample(self, rng):
        a = random_complex(rng, self.n)
        b = random_complex(rng, self.n)
        return np.concatenate([a.real, a.imag, b.real, b.imag])


def slice_diameter(
    s: SliceSpec, opts: SearchOptions = DIAMETER_OPTIONS, threads: int | None = None
) -> Estimate:
    """Best found ``sup ||x - y||_p`` over x, y in the slice: a lower bound."""
    if s.is_empty:
        return Estimate("slice_diameter", 0.0, "lower", 0, opts.seed, "empty slice (delta <= 0)")
    prob = _SliceProblem(s)
    res = maximize(prob.objective, _fset(prob), opts, threads=threads)
    if not res.found:
        return Estimate(
            "slice_diameter", 0.0, "lower", res.evaluations, opts.seed, "no feasible point found"
        )
    x, y = prob.decode(res.point[None, :])
    space = s.functional.space
    wit = witness_doc(
        "slice", x=LpFunction(space, x[0]), y=LpFunction(space, y[0]), phi=s.functional
    )
    return Estimate(
        "slice_diameter", res.value, "lower", res.evaluations, opts.seed,
        "lower bound on the slice diameter", wit,
    )


class _ModulusProblem:
    def __init__(self, n, e, epsilon):
        self.n, self.p, self.eps = n, e.p, epsilon
        self.mu = np.ones((1, n))
        self.dim = 4 * n

    def decode(self, X):
        x = _unit(self.mu, _cplx(X, 0, self.n), self.p)
        y = _unit(self.mu, _cplx(X, 2 * self.n, self.n), self.p)
        return x, y

    def objective(self, X):
        x, y = self.decode(X)
        return _norm(self.mu, x + y, self.p) / 2.0 - 1.0

    def _gap(self, X):
        x, y = self.decode(X)
        return _norm(self.mu, x - y, self.p) - self.eps

    def violation(self, X):
        return np.abs(self._gap(X))

    def repair(self, X):
        x, y = self.decode(X)
        mu, p, eps = self.mu, self.p, self.eps
        far = (_norm(mu, x - y, p) >= eps)[:, None]

        def y_at(t):
            t = t[:, None]
            # toward x while too far apart, toward -x while too close
            near = _unit(mu, (1.0 - t) * x + t * y, p)
            s = np.where(t < 1.0, t / np.where(t < 1.0, 1.0 - t, 1.0), 0.0)
            away = np.where(t < 1.0, _unit(mu, y - s * x, p), -x)
            return np.where(far, near, away)

        def gap(t):
            return _norm(mu, x - y_at(t), p) - eps

        k = X.shape[0]
        hi = _bisect(gap, k)
        lo = np.maximum(hi - 2.0 ** -80, 0.0)
        t = np.where(np.abs(gap(lo)) < np.abs(gap(hi)), lo, hi)
        out = X.copy()
        _put_cplx(out, 0, self.n, x)
        _put_cplx(out, 2 * self.n, self.n, y_at(t))
        return out

    def sample(self, rng):
        a = random_complex(rng, self.n)
        b = random_complex(rng, self.n)
        return np.concatenate([a.real, a.imag, b.real, b.imag])


def modulus_of_convexity(
    n: int, e, epsilon: float, opts: SearchOptions = DIAMETER_OPTIONS, threads: int | None = None
) -> Estimate:
    """Best found ``inf 1 - ||x + y||_p / 2`` over unit x, y in l^p_n with
    ``||x - y||_p = eps``: an upper bound on the modulus of convexity."""
    e = as_exponents(e)
    if n < 2:
        raise DomainError("modulus_of_convexity needs n >= 2")
    if not (0.0 <= epsilon <= 2.0):
        raise DomainError(f"epsilon={epsilon!r} outside [0, 2]")
    prob = _ModulusProblem(int(n), e, float(epsilon))
    res = maximize(prob.objective, _fset(prob), opts, threads=threads)
    if not res.found:
        return Estimate(
            "modulus_of_convexity", math.nan, "upper", res.evaluations, opts.seed,
            "no feasible point found",
        )
    x, y = prob.decode(res.point[None, :])
    space = MeasureSpace(np.ones(n))
    wit = witness_doc("modulus", x=LpFunction(space, x[0]), y=LpFunction(space, y[0]))
    return Estimate(
        "modulus_of_convexity", -res.value, "upper", res.evaluations, opts.seed,
        "upper bound on the modulus of convexity", wit,
    )
