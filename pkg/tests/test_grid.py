import numpy as np
import pytest

import oracles
from weightlab.errors import DomainError, ParameterError
from weightlab.grid import (Cube, DyadicLattice, GridSpec, SampledFunction, average,
                            block_means, canonical_shifts, enumerate_cubes, load_csv,
                            lp_norm, save_csv)


def test_gridspec_invariants():
    g = GridSpec((2), ((0, 1), (0, 2)), (4, 8))
    assert g.ncells == 32
    assert g.cell_volume == pytest.approx(0.25 * 0.25)
    for bad in (3, 1, 0, 12):
        with pytest.raises(ParameterError):
            GridSpec.uniform(1, bad)
    with pytest.raises(ParameterError):
        GridSpec(1, ((1.0, 1.0),), (8,))
    with pytest.raises(ParameterError):
        GridSpec.uniform(3, 8)


def test_sampled_function_checks():
    g = GridSpec.uniform(1, 8)
    with pytest.raises(DomainError):
        SampledFunction(g, np.ones(7))
    with pytest.raises(ParameterError):
        SampledFunction(g, -np.ones(8), nonnegative=True)
    f = SampledFunction(g, np.arange(8.0))
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_average_examples(rng):
    g = GridSpec.uniform(1, 16)
    L = DyadicLattice(g)
    Q = L.cube(3, (1,))
    assert average(SampledFunction(g, np.full(16, 3.0)), Q) == 3.0
    half = np.zeros(16)
    half[8:12] = 1.0
    assert average(SampledFunction(g, half), Q) == 0.5
    v = rng.standard_normal(16)
    assert average(SampledFunction(g, v), Q) == pytest.approx(oracles.mean(v, ((8,), 8)), abs=1e-12)


def test_average_outside_grid():
    g = GridSpec.uniform(1, 8)
    with pytest.raises(DomainError):
        average(SampledFunction(g, np.ones(8)), Cube(0, 2, (2,), (8,)))


def test_lp_norm_examples(rng):
    g = GridSpec.uniform(1, 16, 0.0, 1.0)
    one = SampledFunction(g, np.ones(16))
    for p in (1, 2, 3.5):
        assert lp_norm(one, one, p) == pytest.approx(1.0, abs=1e-14)
    half = SampledFunction(g, np.r_[np.ones(8), np.zeros(8)])
    assert lp_norm(half, one, 2) == pytest.approx(np.sqrt(0.5))
    f, w = rng.standard_normal(16), rng.random(16)
    direct = sum(abs(a) ** 3 * b for a, b in zip(f, w)) / 16
    assert lp_norm(SampledFunction(g, f), SampledFunction(g, w), 3) == pytest.approx(direct ** (1 / 3))
    assert lp_norm(SampledFunction(g, -2.5 * f), SampledFunction(g, w), 3) == pytest.approx(
        2.5 * direct ** (1 / 3))
    with pytest.raises(ParameterError):
        lp_norm(one, one, 0.5)
    with pytest.raises(DomainError):
        lp_norm(one, SampledFunction(GridSpec.uniform(1, 8), np.ones(8)), 2)


@pytest.mark.parametrize("n,res,min_cells,count", [(1, 8, 1, 15), (1, 8, 4, 3), (2, 4, 1, 21)])
def test_enumerate_cubes_counts(n, res, min_cells, count):
    cubes = list(enumerate_cubes(DyadicLattice(GridSpec.uniform(n, res)), min_cells))
    assert len(cubes) == count
    assert len({(Q.level, Q.start) for Q in cubes}) == count


@pytest.mark.parametrize("n,res", [(1, 32), (2, 8)])
def test_tiling_and_children(n, res):
    g = GridSpec.uniform(n, res)
    L = DyadicLattice(g)
    for k in L.levels:
        hits = np.zeros(g.shape, dtype=int)
        for Q in L.cubes(k):
            hits[Q.slices] += 1
        assert np.all(hits == 1)
        for Q in L.cubes(k):
            kids = L.children(Q)
            if k:
                assert len(kids) == 2 ** n
                m = np.zeros(g.shape, dtype=int)
                for c in kids:
                    m[c.slices] += 1
                assert np.array_equal(m, Q.mask(g).astype(int))


@pytest.mark.parametrize("n,res", [(1, 64), (2, 16)])
def test_shifted_lattices_match_oracle(n, res):
    g = GridSpec.uniform(n, res)
    assert len(canonical_shifts(n)) == 3 ** n
    for s in canonical_shifts(n):
        L = DyadicLattice(g, s)
        mine = sorted((Q.start, Q.side) for Q in enumerate_cubes(L))
        assert mine == sorted(oracles.cubes(g.shape, L.shift_cells))


def test_average_refinement(rng):
    g = GridSpec.uniform(2, 16)
    f = SampledFunction(g, rng.standard_normal(g.shape))
    L = DyadicLattice(g)
    for Q in L.cubes(3):
        kids = [average(f, c) for c in L.children(Q)]
        assert average(f, Q) == pytest.approx(np.mean(kids), abs=1e-12)


def test_block_means_match_oracle(rng):
    g = GridSpec.uniform(1, 64)
    v = rng.standard_normal(64)
    L = DyadicLattice(g, (1,))
    for k in L.levels:
        for Q, m in zip(L.cubes(k), block_means(v, L, k).ravel()):
            assert m == pytest.approx(oracles.mean(v, (Q.start, Q.side)), abs=1e-12)


def test_csv_roundtrip(tmp_path, rng):
    g = GridSpec.uniform(2, 4)
    f = SampledFunction(g, rng.standard_normal(g.shape))
    path = tmp_path / "f.csv"
    save_csv(f, path)
    back = load_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
    path.write_text("1\n2\n")
    with pytest.raises(DomainError):
        load_csv(path)
