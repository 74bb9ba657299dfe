"""Seeded instance generation, multi-start maximization and grid refinement.

Reproducibility rests on one rule: every restart ``i`` draws all of its
randomness from its own generator seeded with ``(seed, i)``.  Restarts are
grouped into fixed-size blocks that are vectorized with numpy and may run on
worker threads; since block boundaries do not depend on the thread count and
results are merged by restart index, outputs are identical for any number of
workers and a longer run only ever adds restarts to a shorter one.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measure_space import LpFunction, MeasureSpace, dual_witness, lp_norm, pairing
from .scalar_core import as_exponents

THREADS_ENV = "LPCONV_THREADS"
BLOCK_SIZE = 500
FEASIBILITY_TOL = 1e-9


def worker_count(threads: int | None = None) -> int:
    """Number of worker threads: explicit argument, else LPCONV_THREADS, else CPU count."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _run_blocks(fn, blocks, threads):
    n = worker_count(threads)
    if n == 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, blocks))


@dataclass(frozen=True)
class SearchOptions:
    """Knobs for :func:`maximize`.

    ``max_evaluations`` is the per-restart budget of objective evaluations.
    """

    seed: int = 0
    restarts: int = 10_000
    max_evaluations: int = 600
    penalty_weight: float = 1e3
    refine_tolerance: float = 1e-10
    initial_step: float = 0.3

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_evaluations < 2:
            raise ValueError("max_evaluations must be >= 2")
        if not self.penalty_weight > 0 or not self.refine_tolerance > 0:
            raise ValueError("penalty_weight and refine_tolerance must be positive")


DIAMETER_OPTIONS = SearchOptions(restarts=200, max_evaluations=600)


def restart_rng(seed: int, index: int) -> np.random.Generator:
    """The private generator of restart ``index`` under ``seed``."""
    return np.random.default_rng([int(seed), int(index)])


# -- feasible sets -------------------------------------------------------------


@dataclass
class FeasibleSet:
    """Description of the region a search runs over, in a flat real encoding.

    Parameters
    ----------
    dim
        Length of a parameter vector.
    sample
        ``sample(rng) -> (dim,)`` starting point for one restart.
    violation
        ``violation(X) -> (k,)`` nonnegative constraint violation of a batch;
        enters the objective as an exact penalty.
    repair
        Optional ``repair(X) -> X`` pulling a batch into the feasible set.
    feasible
        ``feasible(X) -> (k,) bool``; the final filter.  Defaults to
        ``violation(X) <= FEASIBILITY_TOL``.
    active
        Mask of coordinates the search may move; others stay at their sampled
        value (e.g. a support pattern fixed per restart).
    repair_in_loop
        Score every candidate at its repaired point instead of penalizing it.
        Worth it only when ``repair`` is cheap; the exact penalty makes a sharp
        ridge along the constraint that random directions rarely follow.
    """

    dim: int
    sample: Callable[[np.random.Generator], np.ndarray]
    violation: Callable[[np.ndarray], np.ndarray]
    repair: Callable[[np.ndarray], np.ndarray] | None = None
    feasible: Callable[[np.ndarray], np.ndarray] | None = None
    active: np.ndarray | None = None
    repair_in_loop: bool = False

    def is_feasible(self, X):
        if self.feasible is not None:
            return np.asarray(self.feasible(X), dtype=bool)
        return self.violation(X) <= FEASIBILITY_TOL


@dataclass(frozen=True)
class SearchResult:
    """Outcome of :func:`maximize`.  ``point`` is None iff nothing was feasible."""

    value: float
    point: np.ndarray | None
    evaluations: int
    restart: int
    feasible_restarts: int
    restart_values: np.ndarray = field(repr=False)

    @property
    def found(self) -> bool:
        return self.point is not None


def _climb(objective, fset, X, noise, opts):
    """Batched (+d, -d) pattern search with exact penalty and step adaptation."""
    w = opts.penalty_weight

    if fset.repair_in_loop:
        def score(Y):
            R = fset.repair(Y)
            return objective(R) - w * fset.violation(R)
    else:
        def score(Y):
            return objective(Y) - w * fset.violation(Y)

    F = score(X)
    k = X.shape[0]
    step = np.full(k, opts.initial_step)
    evals = k
    floor = opts.refine_tolerance
    for d in noise:
        live = step > floor
        if not live.any():
            break
        s = np.where(live, step, 0.0)[:, None]
        plus = X + s * d
        minus = X - s * d
        fp = score(plus)
        fm = score(minus)
        evals += 2 * int(live.sum())
        take_p = (fp > F) & (fp >= fm)
        take_m = (fm > F) & ~take_p
        X = np.where(take_p[:, None], plus, np.where(take_m[:, None], minus, X))
        F = np.where(take_p, fp, np.where(take_m, fm, F))
        ok = take_p | take_m
        step = np.where(ok, np.minimum(step * 1.6, 4.0), step * 0.55)
    return X, evals


def maximize(
    objective: Callable[[np.ndarray], np.ndarray],
    fset: FeasibleSet,
    opts: SearchOptions = SearchOptions(),
    threads: int | None = None,
) -> SearchResult:
    """Multi-start derivative-free maximization of ``objective`` over ``fset``.

    ``objective`` maps a ``(k, dim)`` batch to ``(k,)`` values.  Each restart
    climbs the penalized objective, is repaired into the feasible set, then
    filtered; only filtered points can become the witness.
    """
    n_iter = max(1, (opts.max_evaluations - 1) // 2)
    active = None if fset.active is None else np.asarray(fset.active, dtype=float)
    blocks = [
        range(lo, min(lo + BLOCK_SIZE, opts.restarts))
        for lo in range(0, opts.restarts, BLOCK_SIZE)
    ]

    def run(block):
        X0 = np.empty((len(block), fset.dim))
        noise = np.empty((n_iter, len(block), fset.dim))
        for j, i in enumerate(block):
            rng = restart_rng(opts.seed, i)
            X0[j] = fset.sample(rng)
            d = rng.standard_normal((n_iter, fset.dim))
            if active is not None:
                d *= active
            d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
            noise[:, j, :] = d
        if fset.repair is not None:
            X0 = fset.repair(X0)
        X, evals = _climb(objective, fset, X0, noise, opts)
        if fset.repair is not None:
            X = fset.repair(X)
        vals = objective(X)
        ok = fset.is_feasible(X) & np.isfinite(vals)
        vals = np.where(ok, vals, -np.inf)
        return X, vals, evals + len(block)

    parts = _run_blocks(run, blocks, threads)
    X = np.concatenate([p[0] for p in parts])
    vals = np.concatenate([p[1] for p in parts])
    evaluations = int(sum(p[2] for p in parts))
    feasible = int(np.isfinite(vals).sum())
    if feasible == 0:
        return SearchResult(-np.inf, None, evaluations, -1, 0, vals)
    best = int(np.argmax(vals))  # first maximal restart index
    return SearchResult(float(vals[best]), X[best].copy(), evaluations, best, feasible, vals)


# -- grid scan -----------------------------------------------------------------

GRID_BLOCK_ROWS = 64


def grid_refine(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    bounds,
    resolution=(2048, 1024),
    refine_steps: int = 64,
    threads: int | None = None,
    local_points: int = 7,
):
    """Maximize ``f(x, y)`` on a rectangle: coarse scan, then local subdivision.

    The coarse grid includes the rectangle's edges.  Each refinement step
    evaluates a ``local_points x local_points`` stencil spanning one cell
    width around the running maximum (clipped to the rectangle) and halves
    the cell width.

    Returns
    -------
    (value, (x, y), evaluations)
    """
    (x0, x1), (y0, y1) = bounds
    nx, ny = resolution
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    row_blocks = [
        (lo, min(lo + GRID_BLOCK_ROWS, nx)) for lo in range(0, nx, GRID_BLOCK_ROWS)
    ]

    def scan(block):
        lo, hi = block
        vals = f(xs[lo:hi, None], ys[None, :])
        vals = np.broadcast_to(vals, (hi - lo, ny))
        if not np.all(np.isfinite(vals)):
            i, j = np.argwhere(~np.isfinite(vals))[0]
            return ("nonfinite", xs[lo + i], ys[j])
        k = int(np.argmax(vals))
        return (float(vals.flat[k]), lo + k // ny, k % ny)

    parts = _run_blocks(scan, row_blocks, threads)
    best_v, bi, bj = -np.inf, 0, 0
    for part in parts:
        if part[0] == "nonfinite":
            raise FloatingPointError((part[1], part[2]))
        if part[0] > best_v:  # strict: first maximal cell in scan order wins
            best_v, bi, bj = part
    bx, by = xs[bi], ys[bj]
    hx = (x1 - x0) / max(nx - 1, 1)
    hy = (y1 - y0) / max(ny - 1, 1)
    evaluations = nx * ny
    offsets = np.linspace(-1.0, 1.0, local_points)
    for _ in range(refine_steps):
        px = np.clip(bx + hx * offsets, x0, x1)
        py = np.clip(by + hy * offsets, y0, y1)
        vals = np.broadcast_to(f(px[:, None], py[None, :]), (local_points, local_points))
        evaluations += vals.size
        if not np.all(np.isfinite(vals)):
            i, j = np.argwhere(~np.isfinite(vals))[0]
            raise FloatingPointError((px[i], py[j]))
        k = int(np.argmax(vals))
        if vals.flat[k] > best_v:
            best_v = float(vals.flat[k])
            bx, by = px[k // local_points], py[k % local_points]
        hx *= 0.5
        hy *= 0.5
    return best_v, (float(bx), float(by)), evaluations


# -- random instances ----------------------------------------------------------

INSTANCE_KINDS = ("ProbabilitySpace", "BallFunction", "SlicePair", "MidpointPair")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_weights(rng, n):
    w = rng.dirichlet(np.ones(n))
    w = np.maximum(w, 1e-12)
    return w / w.sum()


def random_complex(rng, n, scale=1.0):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _unit(space, vals, e):
    f = LpFunction(space, vals)
    return f / lp_norm(f, e)


@dataclass(frozen=True)
class SlicePair:
    functional: LpFunction
    delta: float
    x: LpFunction
    y: LpFunction


@dataclass(frozen=True)
class MidpointPair:
    x: LpFunction
    y: LpFunction
    delta: float


def random_instance(kind: str, n: int, e, seed=0, delta: float = 0.5):
    """Draw an instance that satisfies the hypotheses of ``kind`` exactly.

    Kinds
    -----
    ProbabilitySpace
        A :class:`MeasureSpace` whose weights sum to 1.
    BallFunction
        An :class:`LpFunction` on a random probability space with norm <= 1.
    SlicePair
        A unit functional phi in L^q and x, y in the slice
        ``{||x||_p <= 1, Re pairing(x, phi) > 1 - delta}``.
    MidpointPair
        Unit x, y with ``||x + y||_p > 2 - delta``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    e = as_exponents(e)
    rng = _rng(seed)
    space = MeasureSpace(random_weights(rng, n))
    if kind == "ProbabilitySpace":
        return space
    if kind == "BallFunction":
        f = _unit(space, random_complex(rng, n), e)
        return f * rng.uniform()
    if kind == "SlicePair":
        phi = _unit(space, random_complex(rng, n), e.swapped())
        anchor = dual_witness(phi, e)
        pts = []
        for _ in range(2):
            x = _unit(space, random_complex(rng, n), e) * rng.uniform()
            pts.append(_pull_into_slice(x, anchor, phi, delta))
        return SlicePair(phi, float(delta), pts[0], pts[1])
    if kind == "MidpointPair":
        x = _unit(space, random_complex(rng, n), e)
        y = _unit(space, random_complex(rng, n), e)
        y = _pull_to_midpoint(x, y, e, delta)
        return MidpointPair(x, y, float(delta))
    raise ValueError(f"unknown instance kind {kind!r}; expected one of {INSTANCE_KINDS}")


def _pull_into_slice(x, anchor, phi, delta):
    # segment toward the norming vector: stays in the ball, pairing rises linearly
    p0 = pairing(x, phi).real
    target = 1.0 - delta
    if p0 > target:
        return x
    t = (target - p0) / (1.0 - p0)
    t = min(1.0, 0.5 * (1.0 + t))
    return x * (1.0 - t) + anchor * t


def _pull_to_midpoint(x, y, e, delta):
    # a small interior margin keeps the strict hypothesis robust to rounding
    target = 2.0 - delta + min(1e-12, 0.5 * delta)
    lo, hi = 0.0, 1.0

    def at(t):
        return _unit(x.space, (1 - t) * y.values + t * x.values, e) if t < 1 else x

    if lp_norm(x + y, e) > target:
        return y
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if lp_norm(x + at(mid), e) > target:
            hi = mid
        else:
            lo = mid
    return at(hi)
