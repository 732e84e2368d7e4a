import numpy as np
import pytest

import oracles
from weightlab.errors import DegenerateWeightError, NumericError, ParameterError
from weightlab.grid import DyadicLattice, GridSpec, SampledFunction, lp_norm, resolve_scope
from weightlab.maximal import (generalized_holder_check, hl_maximal, iterated_maximal,
                               luxemburg_norm, mean_oscillation_ratio, orlicz_maximal,
                               power_maximal, rubio_de_francia)
from weightlab.weights import a1_constant, make_symbol, Weight
from weightlab.young import (YoungFunction, complementary, expl, from_name, identity, llogl,
                             power, rescaled)


def _all_cubes(grid, scope):
    out = []
    for L in resolve_scope(grid, scope):
        out += oracles.cubes(grid.shape, L.shift_cells)
    return out


def test_hl_constant_and_spike():
    g = GridSpec.uniform(1, 8)
    assert np.allclose(hl_maximal(SampledFunction(g, np.ones(8))).values, 1.0)
    spike = SampledFunction(g, np.eye(8)[0])
    expected = [1, 0.5, 0.25, 0.25, 0.125, 0.125, 0.125, 0.125]
    assert np.array_equal(hl_maximal(spike).values, expected)


@pytest.mark.parametrize("scope", ["dyadic", "full"])
@pytest.mark.parametrize("shape", [(64,), (16, 16), (8, 16)])
def test_hl_matches_brute_force(rng, scope, shape):
    g = GridSpec(len(shape), ((-1, 1),) * len(shape), shape)
    v = rng.standard_normal(shape)
    ref = oracles.maximal(v, _all_cubes(g, scope))
    assert np.allclose(hl_maximal(SampledFunction(g, v), scope).values, ref, rtol=0, atol=1e-12)


def test_hl_dominates_and_sublinear(rng):
    g = GridSpec.uniform(1, 128)
    f = SampledFunction(g, rng.standard_normal(128))
    h = SampledFunction(g, rng.standard_normal(128))
    mf, mh = hl_maximal(f).values, hl_maximal(h).values
    assert np.all(mf >= np.abs(f.values))
    assert np.all(hl_maximal(f.like(f.values + h.values)).values <= mf + mh + 1e-12)


def test_power_maximal(rng):
    g = GridSpec.uniform(1, 64)
    f = SampledFunction(g, rng.standard_normal(64))
    assert np.allclose(power_maximal(f, 1.0).values, hl_maximal(f).values, atol=1e-14)
    c = SampledFunction(g, np.full(64, 2.5))
    assert np.allclose(power_maximal(c, 3.0).values, 2.5)
    ref = np.sqrt(oracles.maximal(f.values ** 2, oracles.cubes((64,))))
    assert np.allclose(power_maximal(f, 2.0).values, ref, atol=1e-12)
    prev = None
    for r in (1.0, 1.5, 2.0, 4.0):
        cur = power_maximal(f, r).values
        if prev is not None:
            assert np.all(cur >= prev - 1e-12)
        prev = cur
    with pytest.raises(ParameterError):
        power_maximal(f, 0.0)


def test_iterated_maximal(rng):
    g = GridSpec.uniform(1, 64)
    f = SampledFunction(g, rng.standard_normal(64))
    assert np.array_equal(iterated_maximal(f, 1).values, hl_maximal(f).values)
    assert np.allclose(iterated_maximal(f.like(np.ones(64)), 3).values, 1.0)
    assert np.array_equal(iterated_maximal(f, 2).values, hl_maximal(hl_maximal(f)).values)
    assert np.all(iterated_maximal(f, 3).values >= iterated_maximal(f, 2).values - 1e-12)
    with pytest.raises(ParameterError):
        iterated_maximal(f, 0)


def test_young_functions_validate():
    for psi in (identity(), power(2), llogl(1), llogl(0.5), expl(), rescaled(power(3), 2)):
        psi.validate()
    assert from_name("llogl:2").params["delta"] == 2.0
    with pytest.raises(ParameterError):
        YoungFunction("sqrt", np.sqrt)
    with pytest.raises(ParameterError):
        YoungFunction("bounded", lambda t: t / (1 + t))
    with pytest.raises(ParameterError):
        from_name("nope")


def test_log_plus_bound():
    # (1 + log+ t) <= t^delta / delta
    t = np.logspace(-3, 6, 500)
    for delta in (0.1, 0.5, 1.0):
        assert np.all(1 + np.log(np.maximum(t, 1)) <= np.maximum(t, 1) ** delta / delta * (1 + 1e-12))


def test_luxemburg_reductions(rng):
    g = GridSpec.uniform(1, 32)
    Q = DyadicLattice(g).cube(3, (1,))
    f = SampledFunction(g, rng.standard_normal(32))
    cells = np.abs(f.values[Q.slices])
    assert luxemburg_norm(f, Q, identity()) == pytest.approx(cells.mean(), rel=1e-12)
    assert luxemburg_norm(f, Q, power(3)) == pytest.approx(np.mean(cells ** 3) ** (1 / 3), rel=1e-12)
    assert luxemburg_norm(f.like(np.zeros(32)), Q, llogl()) == 0.0
    assert luxemburg_norm(f.scaled(-4.0), Q, llogl()) == pytest.approx(
        4 * luxemburg_norm(f, Q, llogl()), rel=1e-8)


@pytest.mark.parametrize("a,b", [(1.0, 5.0), (0.2, 30.0), (3.0, 3.5)])
def test_luxemburg_two_valued_llogl(a, b):
    g = GridSpec.uniform(1, 8)
    f = SampledFunction(g, [a] * 4 + [b] * 4)
    Q = DyadicLattice(g).cube(3, (0,))
    psi = llogl()
    assert luxemburg_norm(f, Q, psi) == pytest.approx(oracles.luxemburg(f.values, psi), rel=1e-10)


def test_orlicz_maximal(rng):
    g = GridSpec.uniform(1, 32)
    f = SampledFunction(g, rng.standard_normal(32))
    assert np.allclose(orlicz_maximal(f, identity()).values, hl_maximal(f).values, rtol=1e-12)
    assert np.allclose(orlicz_maximal(f.like(np.full(32, 1.7)), llogl()).values, 1.7, rtol=1e-12)
    psi = llogl()
    ref = oracles.maximal(f.values, oracles.cubes((32,)),
                          lambda v, Q: oracles.luxemburg(v[oracles.cells_of(*Q)], psi))
    assert np.allclose(orlicz_maximal(f, psi).values, ref, rtol=1e-10)


def test_complementary_examples():
    half_square = YoungFunction("t^2/2", lambda t: 0.5 * t ** 2)
    assert complementary(half_square, 0.0) == 0.0
    assert complementary(half_square, 1.0) == pytest.approx(0.5, rel=1e-8)
    assert complementary(power(2), 2.0) == pytest.approx(1.0, rel=1e-8)
    psi = llogl()
    for s in (0.5, 1.0, 1.5, 2.0, 3.0, 4.0):
        assert complementary(psi, s) == pytest.approx(oracles.dense_complementary(psi, s),
                                                      rel=1e-6, abs=1e-9)
    with pytest.raises(NumericError):
        complementary(identity(), 2.0)


def test_generalized_holder(rng):
    g = GridSpec.uniform(1, 16)
    Q = DyadicLattice(g).cube(4, (0,))
    one = SampledFunction(g, np.ones(16))
    lhs, rhs, ok = generalized_holder_check(one, one, Q, power(2))
    assert lhs == 1.0 and ok
    f = SampledFunction(g, rng.standard_normal(16))
    lhs, rhs, ok = generalized_holder_check(f, f, Q, power(2))
    # bar of t^2 is s^2/4, whose Luxemburg norm is half the L2 average
    assert rhs == pytest.approx(np.mean(f.values ** 2), rel=1e-6)
    assert ok
    lhs, rhs, ok = generalized_holder_check(f.like(np.zeros(16)), f, Q, llogl())
    assert lhs == 0 and ok


def test_rubio_de_francia(rng):
    g = GridSpec.uniform(1, 128)
    w = SampledFunction(g, rng.lognormal(size=128), nonnegative=True)
    zero = SampledFunction(g, np.zeros(128), nonnegative=True)
    assert not np.any(rubio_de_francia(zero, w, 2, 2).values)
    h = SampledFunction(g, rng.random(128), nonnegative=True)
    R = rubio_de_francia(h, w, 2.0, 2.0)
    assert np.all(R.values >= h.values)
    v = power_maximal(w, 2.0)
    assert lp_norm(R, v, 2) <= 2 * lp_norm(h, v, 2)
    weight = Weight(R.like(R.values * np.sqrt(v.values), nonnegative=True))
    assert np.isfinite(a1_constant(weight))
    with pytest.raises(ParameterError):
        rubio_de_francia(h, w, 1.0, 2.0)
    with pytest.raises(DegenerateWeightError):
        rubio_de_francia(h, zero, 2.0, 2.0)
    with pytest.raises(NumericError):
        rubio_de_francia(h, w, 2.0, 2.0, max_terms=2)


def test_john_nirenberg_ratio_stable(rng):
    g = GridSpec.uniform(1, 128)
    ratios = []
    for kind in ("linear", "log", "random"):
        b = make_symbol(kind, {"seed": 1, "normalize": True}, g)
        for _ in range(5):
            f = SampledFunction(g, rng.lognormal(size=128))
            ratios.append(mean_oscillation_ratio(b.base, f))
    ratios = np.array(ratios)
    assert np.all(np.isfinite(ratios)) and ratios.max() / np.median(ratios) < 10
