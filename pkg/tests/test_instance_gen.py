import numpy as np
import pytest

from dpnets.instance_gen import (
    GRID_QUANTUM,
    GenConfig,
    SplitMix64,
    gen_graph,
    gen_knapsack,
    gen_sequences,
)


def test_splitmix64_reference_outputs():
    # first outputs of the published algorithm for seed 0
    r = SplitMix64(0)
    assert [r.next_uint64() for _ in range(4)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
        0xF88BB8A8724C81EC,
    ]


def test_splitmix64_seed_masking():
    assert SplitMix64(2**64).next_uint64() == SplitMix64(0).next_uint64()
    assert SplitMix64(-1).next_uint64() == SplitMix64(2**64 - 1).next_uint64()


def test_randint_bounds_and_determinism():
    r = SplitMix64(9)
    draws = [r.randint(3, 17) for _ in range(2000)]
    assert min(draws) == 3 and max(draws) == 17
    r2 = SplitMix64(9)
    assert draws == [r2.randint(3, 17) for _ in range(2000)]
    with pytest.raises(ValueError):
        r.randint(5, 4)


def test_uniform_range():
    r = SplitMix64(11)
    us = [r.uniform() for _ in range(1000)]
    assert all(0.0 <= u < 1.0 for u in us)


def test_shuffle_is_permutation():
    r = SplitMix64(13)
    xs = list(range(20))
    r.shuffle(xs)
    assert sorted(xs) == list(range(20))
    ys = list(range(20))
    SplitMix64(13).shuffle(ys)
    assert xs == ys


def test_gen_knapsack_determinism():
    cfg = GenConfig(123, 30)
    assert gen_knapsack(cfg) == gen_knapsack(cfg)


def test_gen_knapsack_profit_sum_exact():
    for seed in range(200):
        p_star = 1 + seed % 40
        inst = gen_knapsack(GenConfig(seed, p_star))
        assert sum(inst.profits) == p_star


def test_gen_knapsack_size_invariants():
    for seed in range(200):
        inst = gen_knapsack(GenConfig(1000 + seed, 2 + seed % 39))
        assert inst.n >= 2
        assert 1.0 < sum(inst.sizes) < 2.0
        assert all(0.0 < s <= 1.0 for s in inst.sizes)
        # sizes sit on the exactness grid
        assert all(s == round(s / GRID_QUANTUM) * GRID_QUANTUM for s in inst.sizes)


def test_gen_knapsack_p_star_one_single_item():
    inst = gen_knapsack(GenConfig(5, 1))
    assert inst.profits == (1,)
    assert 0.0 < inst.sizes[0] <= 1.0


def test_gen_knapsack_rejects_bad_config():
    with pytest.raises(ValueError):
        GenConfig(1, 0)


def test_gen_graph_properties():
    g = gen_graph(6, 10.0, 21)
    assert np.all(np.diag(g.lengths) == 0.0)
    assert np.all(g.lengths >= 0.0) and np.all(g.lengths <= 10.0)
    assert not np.array_equal(g.lengths, g.lengths.T)  # generally asymmetric
    assert g.resources is None
    assert np.array_equal(gen_graph(6, 10.0, 21).lengths, g.lengths)


def test_gen_graph_integer_lengths_and_resources():
    g = gen_graph(5, 4, 22, with_resources=True, integer_lengths=True)
    off = ~np.eye(5, dtype=bool)
    assert np.all(g.lengths[off] == np.round(g.lengths[off]))
    assert np.all(g.lengths[off] >= 1) and np.all(g.lengths[off] <= 4)
    assert g.resources is not None and np.all(g.resources >= 0.0)


def test_gen_graph_guards():
    with pytest.raises(ValueError):
        gen_graph(1, 10.0, 1)
    with pytest.raises(ValueError):
        gen_graph(3, 0.0, 1)


def test_gen_sequences():
    pair = gen_sequences(8, 5, 4, 33)
    assert pair.m == 8 and pair.n == 5
    assert all(1 <= v <= 4 for v in pair.x + pair.y)
    assert gen_sequences(8, 5, 4, 33) == pair
    with pytest.raises(ValueError):
        gen_sequences(0, 5, 4, 33)
    with pytest.raises(ValueError):
        gen_sequences(5, 5, 0, 33)
