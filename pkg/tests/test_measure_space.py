import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpconv.exceptions import PreconditionError, StructuralError
from lpconv.measure_space import (
    LpFunction,
    MeasureSpace,
    disjoint_split_check,
    dual_witness,
    dumps_function,
    holder_gap,
    induce_probability,
    loads_function,
    lp_norm,
    lp_power,
    lq_norm,
    norming_witness,
    pairing,
    phase_reduction,
    quotient_z,
)
from lpconv.scalar_core import Exponents

exps = st.sampled_from([1.1, 1.5, 2.0, 3.0, 10.0])


def random_unit(rng, n, p, space=None, zeros=0):
    if space is None:
        space = MeasureSpace(rng.dirichlet(np.ones(n)) + 1e-3)
    vals = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    vals[:zeros] = 0
    f = LpFunction(space, vals)
    return f / lp_norm(f, p)


# -- construction ---------------------------------------------------------------


@pytest.mark.parametrize("weights", [[], [1.0, 0.0], [1.0, -1.0], [math.inf], [math.nan]])
def test_space_rejects_bad_weights(weights):
    with pytest.raises(StructuralError):
        MeasureSpace(weights)


def test_function_validation():
    s = MeasureSpace([0.5, 0.5])
    with pytest.raises(StructuralError):
        LpFunction(s, [1.0])
    with pytest.raises(StructuralError):
        LpFunction(s, [1.0, math.nan])
    with pytest.raises(StructuralError):
        pairing(s.constant(), MeasureSpace([1.0, 1.0]).constant())


def test_space_is_immutable():
    s = MeasureSpace([0.5, 0.5])
    with pytest.raises(ValueError):
        s.weights[0] = 3.0


# -- norms and pairing ------------------------------------------------------------


@pytest.mark.parametrize("p", [1.5, 2.0, 7.0])
def test_lp_norm_examples(p):
    assert lp_norm(MeasureSpace([1.0]).constant(), p) == 1.0
    assert lp_norm(MeasureSpace([0.5, 0.5]).function([1, -1]), p) == pytest.approx(1.0)
    assert lp_norm(MeasureSpace([1.0, 1.0]).constant(0.0), p) == 0.0


def test_lp_norm_two_atoms():
    assert lp_norm(MeasureSpace([1.0, 1.0]).constant(), 2.0) == pytest.approx(math.sqrt(2))


def test_pairing_examples():
    s = MeasureSpace.uniform(3)
    assert pairing(s.constant(), s.constant()) == pytest.approx(1.0)
    assert pairing(s.indicator(0), s.indicator(1)) == 0
    assert pairing(s.constant(1j), s.constant()) == pytest.approx(1j)


def test_pairing_does_not_conjugate():
    s = MeasureSpace([1.0])
    assert pairing(s.constant(1j), s.constant(1j)) == pytest.approx(-1.0)


# -- norming witness --------------------------------------------------------------


def test_norming_witness_examples():
    s = MeasureSpace([1.0, 2.0])
    w = norming_witness(s.indicator(0), 3.0)
    assert np.array_equal(w.values, s.indicator(0).values)
    u = MeasureSpace.uniform(5)
    assert np.allclose(norming_witness(u.constant(), 1.5).values, 1.0)
    pair = MeasureSpace([1.0, 1.0]).function([0.6, 0.8])
    assert np.allclose(norming_witness(pair, 2.0).values, [0.6, 0.8])


def test_norming_witness_needs_unit():
    with pytest.raises(PreconditionError, match="got"):
        norming_witness(MeasureSpace([1.0, 1.0]).constant(), 2.0)


@settings(max_examples=60, deadline=None)
@given(exps, st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_norming_witness_properties(p, n, seed):
    rng = np.random.default_rng(seed)
    e = Exponents.from_p(p)
    v = random_unit(rng, n, p, zeros=n // 3)
    w = norming_witness(v, e)
    vw = v.values * w.values
    scale = np.maximum(1.0, np.abs(v.values) ** p)
    assert np.all(np.abs(vw - np.abs(v.values) ** p) <= 1e-12 * scale)
    assert np.all(np.abs(np.abs(w.values) ** e.q - np.abs(v.values) ** p) <= 1e-12 * scale)
    assert abs(lq_norm(w, e) - 1) <= 1e-9
    assert abs(pairing(v, w).real - 1) <= 1e-9
    assert np.all(w.values[v.values == 0] == 0)


@settings(max_examples=40, deadline=None)
@given(exps, st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_norming_witness_round_trip(p, n, seed):
    rng = np.random.default_rng(seed)
    e = Exponents.from_p(p)
    space = MeasureSpace(rng.uniform(0.1, 1.0, n))
    v = LpFunction(space, rng.uniform(0.1, 2.0, n))
    v = v / lp_norm(v, e)
    back = dual_witness(norming_witness(v, e), e)
    assert np.max(np.abs(back.values - v.values)) <= 1e-9


# -- Hölder ------------------------------------------------------------------------


def test_holder_gap_examples():
    s = MeasureSpace([1.0, 1.0])
    assert holder_gap(s.indicator(0), s.indicator(1), 2.0) == 1.0
    v = s.function([0.6, 0.8j])
    assert holder_gap(v, norming_witness(v, 2.0), 2.0) == pytest.approx(0.0, abs=1e-15)
    u, w = s.function([0.5, 0]), s.function([0, 1.0])
    assert holder_gap(u, w, 3.0) == pytest.approx(lp_norm(u, 3.0) * lq_norm(w, 3.0))


@settings(max_examples=60, deadline=None)
@given(exps, st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_holder_inequality(p, n, seed):
    rng = np.random.default_rng(seed)
    e = Exponents.from_p(p)
    u = random_unit(rng, n, p)
    w = LpFunction(u.space, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    w = w / lq_norm(w, e)
    assert pairing(u, w).real <= 1 + 1e-9
    assert holder_gap(u, w, e) >= -1e-12


def test_holder_equality_forces_norming_relation():
    rng = np.random.default_rng(5)
    for p in (1.5, 2.0, 3.0):
        e = Exponents.from_p(p)
        u = random_unit(rng, 6, p)
        w = norming_witness(u, e)
        assert holder_gap(u, w, e) <= 1e-9
        uw = u.values * w.values
        assert np.allclose(uw, np.abs(u.values) ** p, atol=1e-4)
        assert np.allclose(np.abs(w.values) ** e.q, np.abs(u.values) ** p, atol=1e-4)


# -- Lemma2 machinery ------------------------------------------------------------------


def _triple(rng, n, p, zeros=0):
    e = Exponents.from_p(p)
    v = random_unit(rng, n, p, zeros=zeros)
    w = norming_witness(v, e)
    u = LpFunction(v.space, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return u / (1.5 * lp_norm(u, e)), v, w, e


def test_phase_reduction_example():
    s = MeasureSpace([1.0, 1.0])
    v = s.function([1j, 0])
    w = norming_witness(v, 2.0)
    u = s.function([2.0, 3.0 + 1j])
    u2, v2, w2 = phase_reduction(u, v, w)
    assert np.allclose(v2.values, [1, 0])
    assert np.allclose(u2.values, [-2j, 3 + 1j])
    assert pairing(u2, w2) == pytest.approx(pairing(u, w))


def test_phase_reduction_identity_on_nonnegative():
    s = MeasureSpace([0.5, 0.5])
    v = s.function([1.0, 1.0])
    u = s.function([0.3, -0.2j])
    u2, v2, w2 = phase_reduction(u, v, norming_witness(v, 2.5))
    assert np.array_equal(u2.values, u.values)
    assert np.array_equal(v2.values, v.values)


@settings(max_examples=60, deadline=None)
@given(exps, st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_phase_reduction_preserves_norms(p, n, seed):
    rng = np.random.default_rng(seed)
    u, v, w, e = _triple(rng, n, p, zeros=n // 3)
    u2, v2, w2 = phase_reduction(u, v, w)
    for a, b in ((u, u2), (v, v2)):
        assert abs(lp_norm(a, e) - lp_norm(b, e)) <= 1e-12
    assert abs(lq_norm(w, e) - lq_norm(w2, e)) <= 1e-12
    assert abs(pairing(u, w).real - pairing(u2, w2).real) <= 1e-12
    assert abs(pairing(v, w).real - pairing(v2, w2).real) <= 1e-12
    assert np.all(v2.values.real >= 0) and np.all(v2.values.imag == 0)
    assert np.all(w2.values.real >= 0) and np.all(w2.values.imag == 0)


def test_phase_reduction_rejects_non_witness():
    s = MeasureSpace([1.0])
    with pytest.raises(PreconditionError):
        phase_reduction(s.constant(), s.constant(1.0), s.constant(-1.0))


def test_quotient_examples():
    s = MeasureSpace([1.0, 1.0, 1.0])
    v = s.function([1.0, 2.0, 0.0])
    u = s.function([3.0, 1j, 5.0])
    z = quotient_z(u, v)
    assert np.allclose(z.values, [3.0, 0.5j, 0.0])
    assert (u - z * v).values[2] == 5.0
    assert np.allclose(quotient_z(v, v).values, [1, 1, 0])
    with pytest.raises(PreconditionError):
        quotient_z(u, s.function([1j, 1, 1]))


@settings(max_examples=60, deadline=None)
@given(exps, st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_quotient_split_properties(p, n, seed):
    rng = np.random.default_rng(seed)
    u, v, w, e = _triple(rng, n, p, zeros=n // 2)
    u2, v2, w2 = phase_reduction(u, v, w)
    z = quotient_z(u2, v2)
    zv = z * v2
    assert np.max(np.abs((u2 - zv).values * zv.values)) <= 1e-12
    assert disjoint_split_check(u2, z, v2, e) <= 1e-12 * max(1.0, lp_power(u2, e))
    # Re int z v w = Re int u w, on supp(v) and off it
    assert abs(pairing(zv, w2) - pairing(u2, w2)) <= 1e-12
    # change of variables: int |z-1|^p dnu = int_{v != 0} |u - v|^p dmu
    nu = induce_probability(v2, w2, e)
    lhs = float(np.sum(nu.atom_masses * np.abs(z.values - 1) ** p))
    on = v2.values != 0
    rhs = float(np.sum((u2.space.weights * np.abs(u2.values - v2.values) ** p)[on]))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, rhs)


def test_induce_probability_examples():
    s = MeasureSpace.uniform(4)
    nu = induce_probability(s.constant(), s.constant(), 3.0)
    assert np.allclose(nu.atom_masses, s.weights)
    t = MeasureSpace([1.0, 2.0])
    nu = induce_probability(t.indicator(0), t.indicator(0), 1.5)
    assert nu.total_mass == 1.0
    assert list(nu.support) == [True, False]
    assert nu.support_space().n_atoms == 1


@settings(max_examples=60, deadline=None)
@given(exps, st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_induce_probability_triple_density(p, n, seed):
    rng = np.random.default_rng(seed)
    e = Exponents.from_p(p)
    space = MeasureSpace(rng.uniform(0.1, 1.0, n))
    v = LpFunction(space, rng.uniform(0, 2, n))
    v = v / lp_norm(v, e)
    w = norming_witness(v, e)
    nu = induce_probability(v, w, e)
    vr, wr = v.values.real, w.values.real
    assert np.max(np.abs(nu.densities - vr * wr)) <= 1e-12
    assert np.max(np.abs(nu.densities - wr ** e.q)) <= 1e-12
    assert abs(nu.total_mass - 1) <= 1e-9


def test_induce_probability_reports_atom():
    s = MeasureSpace([0.5, 0.5])
    v = s.constant(1.0)
    with pytest.raises(PreconditionError, match="atom 1"):
        induce_probability(v, s.function([1.0, 0.5]), 2.0)
    with pytest.raises(PreconditionError, match="atom 0"):
        induce_probability(s.function([-1.0, 1.0]), v, 2.0)


# -- JSON --------------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_json_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    f = random_unit(rng, n, 2.0)
    g = loads_function(dumps_function(f))
    assert np.array_equal(g.values, f.values)
    assert np.array_equal(g.space.weights, f.space.weights)


def test_json_schema():
    f = MeasureSpace([0.25, 0.75]).function([1.0, 2j])
    assert f.to_dict() == {"weights": [0.25, 0.75], "values": [[1.0, 0.0], [0.0, 2.0]]}
    assert loads_function('{"weights": [1], "values": [3]}').values[0] == 3
