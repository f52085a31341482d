"""Fixed-width ReLU network executing the rounded knapsack recursion.

The cell keeps only P table rows regardless of the instance: once the
running profit total exceeds P, profits are rounded at granularity
d = (running total) / P.  Each step maps (g(., i-1), running total,
p_i, s_i) to (g(., i), new total) in depth 5: one hidden layer derives
the old/new granularities, two hidden layers locate the re-indexed rows
p1 (skip the item) and p2 (take it) on the coarser previous grid, and a
final hidden layer forms the minimum.  Rows satisfy the witness
guarantee: g(p, i) <= 1 implies some subset of the first i items has
profit at least p * d_i and size at most g(p, i), and with
P = ceil(n**2 / eps) the extracted value is at least (1 - eps) times
the optimum.

Exactness note: the granularity neurons store the scaled integer value
max(0, total - P) = P * (d - 1) rather than d - 1 itself, and the
downstream weights absorb the factor P.  The computed function is
identical, but every selector pre-activation becomes an integer, so the
zero-versus->=2 dichotomy the construction relies on holds bit-exactly
in doubles (weights 1/P would round for general P).  The builder
records the profit range for which this stays below 2**52; the runner
enforces it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil

import numpy as np

from .errors import InfeasibleTargetError, NumericOverflowError
from .knapsack_oracles import (
    CAPACITY_TOL,
    FptasTable,
    KnapsackInstance,
    Solution,
    brute_force,
    coarse_index,
    coarse_index_with_item,
)
from .relu_core import NetworkBuilder, ReluNetwork, affine_sum

__all__ = [
    "FptasCell",
    "FptasTrace",
    "TradeoffPoint",
    "build_fptas_cell",
    "fptas_backtrack",
    "resolution_for",
    "run_fptas",
    "solve_approx",
    "solve_with_resolution",
    "width_quality_curve",
]


@dataclass(frozen=True)
class FptasCell:
    """One rounded-recursion step as a depth-5 network.

    Inputs:  g_in(1..P), total_in, p_in, s_in          (P + 3 neurons).
    Hidden:  2 granularity neurons; 2*P**2 + 2*P selector gates;
             P**2 + P keep neurons; P minimum helpers.
    Outputs: g_out(1..P), total_out = total_in + p_in  (P + 1 neurons).

    ``max_profit_with_item`` bounds sum(profits) + max(profit) for exact
    evaluation; :func:`run_fptas` refuses instances beyond it.
    """

    net: ReluNetwork
    resolution: int  # P
    max_profit_with_item: int

    # Layer-2/3 blocks are laid out triangle by triangle, row-major in p.
    # "upper" pairs have p <= k (skip-item side), "lower" pairs k <= p
    # (take-item side).

    def _start_upper(self, p: int) -> int:
        return (p - 1) * self.resolution - (p - 1) * (p - 2) // 2

    def _start_lower(self, p: int) -> int:
        return p * (p - 1) // 2

    @property
    def _triangle(self) -> int:
        return self.resolution * (self.resolution + 1) // 2

    def idx_gate_old(self) -> int:
        return 0

    def idx_gate_new(self) -> int:
        return 1

    def idx_skip_gate_plus(self, p: int, k: int) -> int:
        return self._start_upper(p) + (k - p)

    def idx_skip_gate_minus(self, p: int, k: int) -> int:
        return self._triangle + self._start_upper(p) + (k - p)

    def idx_take_gate_plus(self, p: int, k: int) -> int:
        return 2 * self._triangle + self._start_lower(p) + (k - 1)

    def idx_take_gate_minus(self, p: int, k: int) -> int:
        return 3 * self._triangle + self._start_lower(p) + (k - 1)

    def idx_skip_keep(self, p: int, k: int) -> int:
        return self._start_upper(p) + (k - p)

    def idx_take_keep(self, p: int, k: int) -> int:
        return self._triangle + self._start_lower(p) + (k - 1)

    def idx_min_helper(self, p: int) -> int:
        return p - 1

    def selected_values(self, layers, p: int):
        """(h1, h2) for row p from recorded activations: the values the two
        branches of the minimum see (2 / 0 when nothing is selected)."""
        P = self.resolution
        l3 = layers[3]
        u = self._start_upper(p)
        h1 = 2.0 - float(np.sum(l3[u : u + (P - p + 1)]))
        lo = self._triangle + self._start_lower(p)
        h2 = float(np.sum(l3[lo : lo + p]))
        return h1, h2

    def granularities(self, layers):
        """(d_old, d_new) implied by the recorded layer-1 activations."""
        P = self.resolution
        return (layers[1][0] + P) / P, (layers[1][1] + P) / P


@lru_cache(maxsize=4)
def build_fptas_cell(resolution: int) -> FptasCell:
    """Construct the rounded-step cell at resolution P >= 1.

    Cells are immutable; the few most recent resolutions stay cached
    (sweeps revisit the same handful of resolutions per item count).
    """
    P = resolution
    if P < 1:
        raise ValueError("resolution must be >= 1")
    if P > 4096:
        raise ValueError("resolution above 4096 would need gigabytes of arcs")
    b = NetworkBuilder(P + 3)
    refs = b.input_refs()
    g_in = refs[:P]  # g_in[p - 1] is g_in(p)
    total_in = refs[P]
    p_in = refs[P + 1]
    s_in = refs[P + 2]

    # Scaled granularities: value P * (d - 1) = max(0, total - P), an integer.
    b.new_layer()
    gate_old = b.relu(total_in - P)
    gate_new = b.relu(total_in + p_in - P)

    # Selector gates: for each row p, the pair over k vanishes exactly at
    # the re-indexed row (k = p1 on the skip side, k = p2 on the take
    # side) and is >= 2 elsewhere; pre-activations are even integers.
    b.new_layer()
    upper = [(p, k) for p in range(1, P + 1) for k in range(p, P + 1)]
    lower = [(p, k) for p in range(1, P + 1) for k in range(1, p + 1)]
    skip_plus = {}
    skip_minus = {}
    take_plus = {}
    take_minus = {}
    for p, k in upper:
        skip_plus[p, k] = b.relu(2.0 * p * gate_new - 2.0 * k * gate_old + 2.0 * P * (p - k))
    for p, k in upper:
        skip_minus[p, k] = b.relu(
            2.0 * (k - 1) * gate_old - 2.0 * p * gate_new + 2.0 * P * (k - 1 - p) + 2.0
        )
    for p, k in lower:
        take_plus[p, k] = b.relu(
            2.0 * p * gate_new - 2.0 * k * gate_old - 2.0 * P * p_in + 2.0 * P * (p - k)
        )
    for p, k in lower:
        take_minus[p, k] = b.relu(
            2.0 * (k - 1) * gate_old
            - 2.0 * p * gate_new
            + 2.0 * P * p_in
            + 2.0 * P * (k - 1 - p)
            + 2.0
        )

    # Keep neurons: exactly one per row survives its gates and carries
    # 2 - g_in(k) (skip side) or g_in(k) (take side).
    b.new_layer()
    skip_keep = {}
    take_keep = {}
    for p, k in upper:
        skip_keep[p, k] = b.relu(2.0 - g_in[k - 1] - skip_plus[p, k] - skip_minus[p, k])
    for p, k in lower:
        take_keep[p, k] = b.relu(g_in[k - 1] - take_plus[p, k] - take_minus[p, k])

    # h1(p) = 2 - sum_k skip_keep(p, k) defaults to 2 (nothing reachable);
    # h2(p) = sum_k take_keep(p, k) defaults to 0 (item alone suffices).
    h1 = {}
    h2 = {}
    for p in range(1, P + 1):
        h1[p] = affine_sum(
            (skip_keep[p, k] for k in range(p, P + 1)), coeff=-1.0, const=2.0
        )
        h2[p] = affine_sum(take_keep[p, k] for k in range(1, p + 1))

    b.new_layer()
    min_helper = [b.relu(h1[p] - s_in - h2[p]) for p in range(1, P + 1)]

    outputs = [h1[p] - min_helper[p - 1] for p in range(1, P + 1)]
    outputs.append(total_in + p_in)
    net = b.finish(outputs)
    budget = (2**52) // (2 * P) - P
    return FptasCell(net, P, budget)


@dataclass(frozen=True)
class FptasTrace:
    """Result of a recurrent run: the rounded table plus optional activations."""

    table: FptasTable
    hidden: list | None = None


def run_fptas(cell: FptasCell, inst: KnapsackInstance, record_hidden: bool = False) -> FptasTrace:
    """Apply the cell once per item, threading (g states, profit total).

    The states match :func:`dpnets.knapsack_oracles.fptas_reference`
    exactly: the comparison terms are integer-valued by construction and
    the size terms accumulate identically.
    """
    P = cell.resolution
    if inst.total_profit + max(inst.profits) > cell.max_profit_with_item:
        raise NumericOverflowError(
            f"profit total {inst.total_profit} exceeds the exact-evaluation "
            f"budget {cell.max_profit_with_item} of a resolution-{P} cell"
        )
    state = np.full(P, 2.0)
    total = 0.0
    columns = [state]
    sums = [0]
    hidden = [] if record_hidden else None
    for p_i, s_i in zip(inst.profits, inst.sizes):
        x = np.concatenate([state, [total, float(p_i), s_i]])
        if record_hidden:
            layers = cell.net.evaluate_layers(x)
            hidden.append(layers)
            out = layers[-1]
        else:
            out = cell.net.evaluate(x)
        state, total = out[:P], out[P]
        columns.append(state)
        sums.append(int(total))
    values = np.zeros((P + 1, inst.n + 1))
    values[1:, :] = np.column_stack(columns)
    return FptasTrace(FptasTable(P, values, tuple(sums)), hidden)


def fptas_backtrack(table: FptasTable, inst: KnapsackInstance, target_row: int) -> Solution:
    """Recover a subset witnessing row ``target_row`` of the final column.

    Replays the recursion's index maps: at step i the row moves to p1 if
    the item was skipped and to p2 if it was taken (taken exactly when
    the take branch was strictly better, ties skip).  The subset's
    profit is at least target_row * d_n and its size is within n * tol
    of g(target_row, n).
    """
    P = table.resolution
    if not 1 <= target_row <= P:
        raise ValueError(f"target row {target_row} outside [1, {P}]")
    if table.values[target_row, -1] > 1.0 + CAPACITY_TOL:
        raise InfeasibleTargetError(f"row {target_row} is not feasible in the final column")
    items = []
    p = target_row
    for i in range(table.n_items, 0, -1):
        if p <= 0:
            break
        p_i = inst.profits[i - 1]
        s_i = inst.sizes[i - 1]
        d_old = table.scaled_granularity(i - 1)
        d_new = table.scaled_granularity(i)
        p1 = coarse_index(p, d_old, d_new)
        p2 = coarse_index_with_item(p, p_i, P, d_old, d_new)
        h1 = table.values[p1, i - 1] if p1 <= P else 2.0
        h2 = table.values[p2, i - 1] if p2 >= 1 else 0.0
        if s_i + h2 < h1 - CAPACITY_TOL:
            items.append(i - 1)
            p = p2
        else:
            p = p1
    items = tuple(sorted(items))
    total = float(sum(inst.sizes[i] for i in items))
    profit = sum(inst.profits[i] for i in items)
    return Solution(profit, items, total)


def resolution_for(n: int, epsilon) -> int:
    """P = ceil(n**2 / epsilon), computed exactly.

    Floats are read back through their decimal repr (so 0.1 means 1/10,
    not the slightly larger double), strings and Fractions are taken
    verbatim.
    """
    eps = epsilon if isinstance(epsilon, Fraction) else Fraction(str(epsilon))
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in ]0, 1]")
    return int(ceil(Fraction(n * n) / eps))


def solve_with_resolution(inst: KnapsackInstance, resolution: int) -> Solution:
    """Best guaranteed profit at a fixed resolution, with a witness subset.

    The value is max{p * d_n : g(p, n) <= 1 + tol} (0 if no row
    qualifies; an entry of exactly 2 never does since 2 means "nothing
    asserted").  The witness is recovered by backtracking, so its actual
    profit may exceed the guaranteed value.
    """
    cell = build_fptas_cell(resolution)
    table = run_fptas(cell, inst).table
    row = table.best_row()
    if row == 0:
        return Solution(0.0, (), 0.0)
    value = row * table.scaled_granularity(inst.n) / resolution
    recovered = fptas_backtrack(table, inst, row)
    return Solution(value, recovered.items, recovered.total_size)


def solve_approx(inst: KnapsackInstance, epsilon) -> Solution:
    """(1 - epsilon)-approximate solution via resolution ceil(n**2 / eps)."""
    return solve_with_resolution(inst, resolution_for(inst.n, epsilon))


@dataclass(frozen=True)
class TradeoffPoint:
    """One row of the width-versus-quality sweep."""

    resolution: int
    width: int
    p_nn: float
    p_opt: int
    ratio: float


def width_quality_curve(inst: KnapsackInstance, resolutions) -> list:
    """Sweep resolutions and report value ratio against brute force.

    The cell width at resolution P is 2*P**2 + 2*P; the achieved ratio
    is never below 1 - n**2 / P, and P >= total profit gives ratio 1.
    """
    opt = brute_force(inst).value
    points = []
    for P in resolutions:
        sol = solve_with_resolution(inst, P)
        width = 2 * P * P + 2 * P
        points.append(TradeoffPoint(P, width, sol.value, int(opt), sol.value / opt))
    return points


def tradeoff_csv(points) -> str:
    """Plot-ready CSV for a width-versus-quality sweep."""
    lines = ["P,width,p_nn,p_opt,ratio"]
    for pt in points:
        lines.append(f"{pt.resolution},{pt.width},{pt.p_nn!r},{pt.p_opt},{pt.ratio!r}")
    return "\n".join(lines) + "\n"
