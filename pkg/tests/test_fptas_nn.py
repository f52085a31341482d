from fractions import Fraction

import numpy as np
import pytest

from dpnets.dp_nn import build_dp_cell, run_recurrent
from dpnets.errors import NumericOverflowError
from dpnets.fptas_nn import (
    build_fptas_cell,
    fptas_backtrack,
    resolution_for,
    run_fptas,
    solve_approx,
    solve_with_resolution,
    tradeoff_csv,
    width_quality_curve,
)
from dpnets.instance_gen import SplitMix64
from dpnets.knapsack_oracles import (
    KnapsackInstance,
    brute_force,
    fptas_reference,
)
from dpnets.verify import SuiteResult, probe_fptas_cell

from conftest import capped_instance, instance_stream


def test_cell_layer_sizes_example():
    cell = build_fptas_cell(3)
    assert cell.net.layer_sizes == (6, 2, 24, 12, 3, 4)
    assert cell.net.depth == 5


@pytest.mark.parametrize("P", range(1, 13))
def test_cell_layer_size_formulas(P):
    cell = build_fptas_cell(P)
    assert cell.net.layer_sizes == (P + 3, 2, 2 * P * P + 2 * P, P * P + P, P, P + 1)


def test_granularity_subnet():
    cell = build_fptas_cell(20)
    # below the threshold both granularities clamp to 1
    layers = cell.net.evaluate_layers(np.concatenate([np.full(20, 2.0), [10, 5, 0.5]]))
    assert cell.granularities(layers) == (1.0, 1.0)
    # beyond it they scale with the running profit total
    layers = cell.net.evaluate_layers(np.concatenate([np.full(20, 2.0), [30, 10, 0.5]]))
    assert cell.granularities(layers) == (1.5, 2.0)


def test_profit_total_output():
    cell = build_fptas_cell(4)
    out = cell.net.evaluate(np.concatenate([np.full(4, 2.0), [7, 3, 0.5]]))
    assert out[4] == 10.0


def test_single_big_item():
    inst = KnapsackInstance((10,), (0.4,))
    table = run_fptas(build_fptas_cell(5), inst).table
    ref = fptas_reference(inst, 5)
    assert np.max(np.abs(table.values - ref.values)) <= 1e-9
    assert table.p_star_sums == (0, 10)
    assert np.all(np.abs(table.values[1:, 1] - 0.4) <= 1e-9)


def test_states_match_reference_exactly():
    # generated sizes live on the 2**-26 grid, where the network's
    # arithmetic is exact, so the match is bit-for-bit
    cells = {}
    count = 0
    for k, inst in enumerate(instance_stream(21_000, 200, 2, 60, 10)):
        for P in (5, 10, 25):
            if P not in cells:
                cells[P] = build_fptas_cell(P)
            cell = cells[P]
            table = run_fptas(cell, inst).table
            ref = fptas_reference(inst, P)
            assert np.array_equal(table.values, ref.values)
            assert table.p_star_sums == ref.p_star_sums
            count += 1
    assert count == 600


def test_degenerates_to_exact_network():
    # while the profit total stays within P, states equal the exact
    # network's states entry for entry
    for inst in instance_stream(22_000, 50, 2, 30, 10):
        P = sum(inst.profits)
        rounded = run_fptas(build_fptas_cell(P), inst).table
        exact = run_recurrent(build_dp_cell(P), inst)
        for i, col in enumerate(exact.states):
            assert np.array_equal(rounded.values[1:, i], col)


def test_selector_probes():
    result = SuiteResult("probes")
    probe_fptas_cell(build_fptas_cell(6), SplitMix64(55), 40, result)
    assert result.passed, result.messages


def test_resolution_for_exact_ceil():
    assert resolution_for(5, "0.1") == 250
    assert resolution_for(5, 0.1) == 250  # float 0.1 means 1/10, not its double
    assert resolution_for(5, Fraction(1, 4)) == 100
    assert resolution_for(3, 1) == 9
    with pytest.raises(ValueError):
        resolution_for(3, 0)
    with pytest.raises(ValueError):
        resolution_for(3, "1.5")


def test_exact_when_resolution_covers_total():
    for inst in instance_stream(23_000, 40, 2, 25, 10):
        best = brute_force(inst)
        sol = solve_with_resolution(inst, sum(inst.profits))
        assert sol.value == best.value


def test_guarantee_on_random_instances():
    for k, inst in enumerate(instance_stream(24_000, 60, 2, 40, 8)):
        eps = [Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(1)][k % 4]
        best = brute_force(inst)
        sol = solve_approx(inst, eps)
        assert Fraction(sol.value) >= (1 - eps) * best.value
        assert sol.value <= best.value + 1e-9
        got_profit = sum(inst.profits[i] for i in sol.items)
        got_size = sum(inst.sizes[i] for i in sol.items)
        assert got_profit >= sol.value - 1e-9
        assert got_size <= 1.0 + 1e-9


def test_backtrack_witnesses_every_feasible_row():
    for inst in instance_stream(25_000, 30, 4, 40, 8):
        P = 7
        table = run_fptas(build_fptas_cell(P), inst).table
        d_n = table.scaled_granularity(inst.n)
        for p in range(1, P + 1):
            if table.values[p, -1] > 1.0 + 1e-9:
                continue
            sol = fptas_backtrack(table, inst, p)
            profit = sum(inst.profits[i] for i in sol.items)
            size = sum(inst.sizes[i] for i in sol.items)
            assert profit * P >= p * d_n
            assert size <= table.values[p, -1] + inst.n * 1e-9


def test_monotone_quality_sweep_endpoint():
    inst = capped_instance(97, 35, 10)
    best = brute_force(inst).value
    values = [
        solve_with_resolution(inst, P).value
        for P in (3, 6, 12, 25, 50, sum(inst.profits))
    ]
    assert values[-1] == best
    assert all(v <= best + 1e-9 for v in values)


def test_width_quality_curve():
    inst = capped_instance(131, 30, 10)
    n = inst.n
    resolutions = [2, 5, 11, 23, sum(inst.profits)]
    points = width_quality_curve(inst, resolutions)
    for pt in points:
        assert pt.width == 2 * pt.resolution**2 + 2 * pt.resolution
        assert pt.ratio >= 1 - n * n / pt.resolution - 1e-12
        assert 0.0 <= pt.ratio <= 1.0 + 1e-12
    assert points[-1].ratio == 1.0


def test_tradeoff_csv_columns():
    inst = capped_instance(131, 30, 10)
    text = tradeoff_csv(width_quality_curve(inst, [3, 9]))
    lines = text.strip().split("\n")
    assert lines[0] == "P,width,p_nn,p_opt,ratio"
    assert len(lines) == 3
    assert all(len(line.split(",")) == 5 for line in lines[1:])


def test_overflow_guard_fires_before_evaluation():
    cell = build_fptas_cell(4)
    huge = int(cell.max_profit_with_item)  # sum + max just past the budget
    inst = KnapsackInstance((huge,), (0.5,))
    with pytest.raises(NumericOverflowError):
        run_fptas(cell, inst)


def test_g_range_and_two_means_nothing_asserted():
    for inst in instance_stream(26_000, 20, 5, 50, 8):
        table = run_fptas(build_fptas_cell(6), inst).table
        assert np.all(table.values[1:, :] >= 0.0)
        assert np.all(table.values[1:, :] <= 2.0)
