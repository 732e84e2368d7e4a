import numpy as np
import pytest

import oracles
from weightlab.errors import DegenerateWeightError, NumericError, ParameterError
from weightlab.grid import GridSpec, SampledFunction, resolve_scope
from weightlab.registry import load_registry
from weightlab.weights import (BmoSymbol, Weight, a1_constant, ap_constant, bmo_norm,
                               exp_symbol_ap, fujii_wilson_constant, make_symbol, make_weight,
                               rhi_check)


def _cubes(grid, scope="dyadic"):
    out = []
    for L in resolve_scope(grid, scope):
        out += oracles.cubes(grid.shape, L.shift_cells)
    return out


def _corpus(grid, rng, n=6):
    ws = [make_weight("lognormal", {"sigma": s, "seed": i}, grid)
          for i, s in enumerate(np.linspace(0.2, 1.5, n))]
    ws += [make_weight("power", {"alpha": a}, grid) for a in (-0.8, -0.3, 0.4, 0.9)]
    ws += [make_weight("step", {"levels": rng.uniform(0.1, 10, 5)}, grid)]
    return ws


@pytest.mark.parametrize("n,res", [(1, 1024), (2, 32)])
def test_constant_weight_normalisation(n, res):
    w = make_weight("constant", {"value": 5.0}, GridSpec.uniform(n, res))
    for p in (1.5, 2, 4):
        assert ap_constant(w, p) == pytest.approx(1.0, abs=1e-12)
    assert a1_constant(w) == pytest.approx(1.0, abs=1e-12)
    assert fujii_wilson_constant(w) == pytest.approx(1.0, abs=1e-12)
    assert fujii_wilson_constant(w, "full") == pytest.approx(1.0, abs=1e-12)


def test_step_weight_ap_matches_brute_force():
    g = GridSpec.uniform(1, 8)
    w = make_weight("step", {"levels": [1.0, 4.0]}, g)
    assert np.array_equal(w.values, [1, 1, 1, 1, 4, 4, 4, 4])
    ref = oracles.ap(w.values, 2.0, _cubes(g))
    assert ap_constant(w, 2.0) == pytest.approx(ref, rel=1e-12)
    assert ref == pytest.approx(2.5 * 0.625)
    assert fujii_wilson_constant(w) == pytest.approx(oracles.fujii_wilson(w.values, _cubes(g)), rel=1e-12)


def test_power_weight_ap_sweep():
    g = GridSpec.uniform(1, 64)
    vals = []
    for alpha in (0.1, 0.3, 0.5, 0.7, 0.9):
        w = make_weight("power", {"alpha": alpha}, g)
        c = ap_constant(w, 2.0)
        assert c == pytest.approx(oracles.ap(w.values, 2.0, _cubes(g)), rel=1e-12)
        vals.append(c)
    assert np.all(np.diff(vals) > 0)


def test_a1_examples():
    g = GridSpec.uniform(1, 64)
    assert a1_constant(make_weight("constant", {"value": 3}, g)) == pytest.approx(1.0)
    vals = [a1_constant(make_weight("power", {"alpha": a}, g)) for a in (-0.3, -0.5, -0.7, -0.9)]
    assert np.all(np.isfinite(vals)) and np.all(np.diff(vals) > 0)
    spike = np.ones(64)
    spike[17] += 10
    w = Weight(SampledFunction(g, spike))
    assert a1_constant(w) == pytest.approx(oracles.a1(spike, _cubes(g)), rel=1e-12)


@pytest.mark.parametrize("scope", ["dyadic", "full"])
def test_constants_match_brute_force(rng, scope):
    g = GridSpec.uniform(1, 32)
    for i in range(4):
        v = rng.lognormal(sigma=1.0, size=32)
        w = Weight(SampledFunction(g, v))
        cubes = _cubes(g, scope)
        assert ap_constant(w, 1.5, scope) == pytest.approx(oracles.ap(v, 1.5, cubes), rel=1e-10)
        assert a1_constant(w, scope) == pytest.approx(oracles.a1(v, cubes), rel=1e-10)
        assert fujii_wilson_constant(w, scope) == pytest.approx(oracles.fujii_wilson(v, cubes), rel=1e-10)


def test_corpus_properties(rng):
    g = GridSpec.uniform(1, 256)
    for w in _corpus(g, rng):
        aps = [ap_constant(w, p) for p in (1.5, 2, 4)]
        a1 = a1_constant(w)
        assert all(c >= 1 - 1e-12 for c in aps)
        assert max(aps) <= a1 * (1 + 1e-12)
        assert aps[0] >= aps[1] - 1e-12 >= aps[2] - 2e-12
        assert fujii_wilson_constant(w) >= 1.0
        s = w.scaled(37.5)
        assert ap_constant(s, 2) == pytest.approx(aps[1], rel=1e-10)
        assert a1_constant(s) == pytest.approx(a1, rel=1e-10)
        assert fujii_wilson_constant(s) == pytest.approx(fujii_wilson_constant(w), rel=1e-10)


def test_zero_cells_rejected():
    g = GridSpec.uniform(1, 8)
    w = Weight(SampledFunction(g, [0, 1, 1, 1, 1, 1, 1, 1]))
    for fn in (lambda: ap_constant(w, 2), lambda: a1_constant(w), lambda: fujii_wilson_constant(w)):
        with pytest.raises(DegenerateWeightError):
            fn()
    with pytest.raises(DegenerateWeightError):
        Weight(SampledFunction(g, np.zeros(8)))
    with pytest.raises(ParameterError):
        ap_constant(make_weight("constant", {}, g), 1.0)


def test_rhi_examples():
    g = GridSpec.uniform(1, 256)
    tau = load_registry()["tau"]
    r = rhi_check(make_weight("constant", {}, g))
    assert r.r_w == pytest.approx(1 + 1 / tau) and r.worst_ratio == pytest.approx(1.0) and r.holds
    assert rhi_check(make_weight("power", {"alpha": 0.9}, g)).holds
    spike = np.full(256, 1e-3)
    spike[100] = 1e3
    res = rhi_check(Weight(SampledFunction(g, spike)), tau=0.01)
    assert res.worst_ratio > 0 and isinstance(res.holds, bool)
    with pytest.raises(ParameterError):
        rhi_check(make_weight("constant", {}, g), tau=0.0)


def test_bmo_examples():
    g8 = GridSpec.uniform(1, 8, 0.0, 1.0)
    assert bmo_norm(make_symbol("constant", {"value": 4}, g8)) == 0.0
    b = make_symbol("linear", {}, g8)
    assert b.norm() == pytest.approx(oracles.bmo(b.values, oracles.cubes((8,))), rel=1e-12)
    logs = [bmo_norm(make_symbol("log", {}, GridSpec.uniform(1, n))) for n in (256, 1024)]
    assert np.all(np.isfinite(logs)) and abs(logs[0] - logs[1]) < 0.1 * logs[1]
    unit = make_symbol("random", {"seed": 2, "normalize": True}, g8)
    assert unit.norm() == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        make_symbol("constant", {"normalize": True}, g8)


def test_exp_symbol_ap():
    g = GridSpec.uniform(1, 256)
    b = make_symbol("log", {"normalize": True}, g)
    assert exp_symbol_ap(b, 0.0, 2.0) == pytest.approx(1.0)
    for s in (-0.05, 0.05):
        assert 1.0 <= exp_symbol_ap(b, s, 2.0) < 1.1
    with pytest.raises(NumericError):
        exp_symbol_ap(b, 1e4, 2.0)


def test_make_weight_examples():
    g = GridSpec.uniform(1, 8)
    w = make_weight("constant", {"value": 5}, g)
    assert np.all(w.values == 5) and a1_constant(w) == 1.0
    assert np.allclose(make_weight("power", {"alpha": 0.0}, g).values, 1.0)
    with pytest.warns(UserWarning):
        make_weight("power", {"alpha": 1.5}, g, p=2)
    for kind, params in (("constant", {"value": -1}), ("power", {"alpha": -1.0}),
                         ("step", {"levels": [1, 0]}), ("lognormal", {"sigma": -1}),
                         ("nope", {})):
        with pytest.raises(ParameterError):
            make_weight(kind, params, g)
    clamp = make_weight("lognormal", {"sigma": 60.0, "seed": 1}, GridSpec.uniform(1, 64))
    assert clamp.values.min() >= 1e-12 * clamp.values.mean() * (1 - 1e-9)


def test_weight_cache_is_write_once():
    w = make_weight("lognormal", {"seed": 4}, GridSpec.uniform(1, 64))
    first = ap_constant(w, 2)
    assert ("ap", 2.0, (0,)) in w._cache
    assert ap_constant(w, 2) is first
