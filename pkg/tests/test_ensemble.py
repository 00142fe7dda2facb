import numpy as np
import pytest
from hypothesis import given, strategies as st

from ccldgm.ensemble import (
    ConstructionError,
    EnsembleSpec,
    FactorGraph,
    dump_edges,
    load_edges,
    remove_code_bit,
    sample,
    sample_coupled,
    sample_uncoupled,
)


@st.composite
def specs(draw, coupled=None):
    l = draw(st.integers(2, 5))
    k = draw(st.integers(2, 3))
    r = l * k // 1 if draw(st.booleans()) else 2 * l
    n = r * draw(st.integers(1, 6))
    if coupled is False:
        return EnsembleSpec(l, r, n)
    L = draw(st.integers(1 if coupled is None else 2, 8))
    w = draw(st.integers(1, L))
    return EnsembleSpec(l, r, n, L, w)


class TestSpec:
    def test_derived_sizes(self):
        s = EnsembleSpec(3, 6, 2000, 32, 2)
        assert s.m == 1000
        assert s.rate == 0.5
        assert s.num_generators == 64000
        assert s.num_code_bits == 32000
        assert s.num_edges == 192000
        assert s.coupled

    @pytest.mark.parametrize(
        "args",
        [(3, 6, 2000, 4, 5), (3, 6, 2001), (0, 6, 10), (3, 6, 10, 0, 1), (3.0, 6, 10), (True, 6, 12)],
    )
    def test_rejects(self, args):
        with pytest.raises(ConstructionError):
            EnsembleSpec(*args)

    def test_construction_error_is_value_error(self):
        with pytest.raises(ValueError):
            EnsembleSpec(3, 6, 7)


class TestUncoupled:
    def test_exact_regular_degrees(self):
        g = sample_uncoupled(EnsembleSpec(3, 6, 2000), seed=0)
        assert np.all(np.diff(g.gen_ptr) == 3)
        assert np.all(np.diff(g.bit_ptr) == 6)
        assert g.num_edges == 6000

    def test_same_seed_same_graph(self):
        spec = EnsembleSpec(4, 8, 400)
        a, b = sample(spec, 5), sample(spec, 5)
        assert np.array_equal(a.edge_list(), b.edge_list())
        assert not np.array_equal(a.edge_list(), sample(spec, 6).edge_list())

    def test_requires_single_position(self):
        with pytest.raises(ConstructionError):
            sample_uncoupled(EnsembleSpec(3, 6, 20, 4, 2))


class TestCoupled:
    def test_window_and_degrees(self):
        spec = EnsembleSpec(3, 6, 200, 16, 3)
        g = sample_coupled(spec, seed=1)
        g.check_invariants(window=3)
        assert np.all(np.diff(g.gen_ptr) == 3)
        assert np.all(np.diff(g.bit_ptr) == 6)

    @pytest.mark.parametrize("shape", [(3, 6, 10, 5, 4), (5, 10, 2, 5, 3), (2, 4, 6, 5, 5)])
    def test_regular_when_window_does_not_divide_sockets(self, shape):
        spec = EnsembleSpec(*shape)
        assert spec.n * spec.l % spec.w != 0
        g = sample(spec, seed=5)
        g.check_invariants(window=spec.w)
        assert np.all(np.diff(g.bit_ptr) == spec.r)

    def test_w1_stays_in_position(self):
        g = sample(EnsembleSpec(3, 6, 60, 5, 1), seed=2)
        assert np.array_equal(g.gen_position[g.edge_gen], g.bit_position[g.edge_bit])

    def test_wraps_around_ring(self):
        spec = EnsembleSpec(3, 6, 300, 6, 3)
        g = sample(spec, seed=3)
        last = g.gen_position[g.edge_gen] == 5
        assert set(np.unique(g.bit_position[g.edge_bit[last]])) == {5, 0, 1}

    def test_position_major_ids(self):
        spec = EnsembleSpec(3, 6, 20, 4, 2)
        g = sample(spec, 0)
        assert np.array_equal(g.gen_position, np.arange(80) // 20)
        assert np.array_equal(g.bit_position, np.arange(40) // 10)
        assert np.all(g.gens_per_position == 20)

    def test_offsets_roughly_uniform(self):
        spec = EnsembleSpec(3, 6, 1000, 8, 4)
        g = sample(spec, 4)
        off = (g.bit_position[g.edge_bit] - g.gen_position[g.edge_gen]) % 8
        freq = np.bincount(off, minlength=4) / off.size
        assert np.allclose(freq, 0.25, atol=0.001)


@given(specs(), st.integers(0, 2**32 - 1))
def test_sampled_graphs_satisfy_invariants(spec, seed):
    g = sample(spec, seed)
    g.check_invariants(window=spec.w)
    assert g.num_edges == spec.num_edges


@given(specs(), st.integers(0, 2**32 - 1), st.data())
def test_removals_keep_invariants(spec, seed, data):
    g = sample(spec, seed)
    order = data.draw(st.permutations(range(g.num_code_bits)))
    k = data.draw(st.integers(0, g.num_code_bits))
    for i in order[:k]:
        touched = remove_code_bit(g, i)
        assert touched == set(int(a) for a in g.edge_gen[g.bit_edge_ids(i)])
    g.check_invariants()
    assert g.bit_alive.sum() == g.num_code_bits - k
    if k == g.num_code_bits:
        assert np.all(g.exhausted)


def test_remove_twice_raises():
    g = sample(EnsembleSpec(3, 6, 12), 0)
    remove_code_bit(g, 3)
    with pytest.raises(ValueError):
        remove_code_bit(g, 3)
    with pytest.raises(IndexError):
        remove_code_bit(g, 6)


def test_copy_and_pristine_are_independent():
    g = sample(EnsembleSpec(3, 6, 12), 0)
    h = g.copy()
    remove_code_bit(h, 0)
    assert g.bit_alive.all()
    p = h.pristine()
    assert p.bit_alive.all() and p.edge_alive.all()
    assert np.array_equal(p.gen_degree, np.diff(g.gen_ptr))


def test_parallel_edges_counted_with_multiplicity():
    g = FactorGraph.from_edges([(0, 0), (0, 0), (1, 0)], 2, 1)
    assert g.gen_neighbors(0) == [0, 0]
    assert sorted(g.bit_neighbors(0)) == [0, 0, 1]
    g.check_invariants()


def test_dump_load_roundtrip(tmp_path):
    g = sample(EnsembleSpec(3, 6, 30, 4, 2), 9)
    path = tmp_path / "g.txt"
    dump_edges(g, path)
    h = load_edges(path)
    assert h.spec == g.spec and h.seed == 9
    assert np.array_equal(np.sort(h.edge_list(), axis=0), np.sort(g.edge_list(), axis=0))
    assert dump_edges(h) == dump_edges(g)
