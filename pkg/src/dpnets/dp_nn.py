"""Fixed-weight ReLU network executing the exact knapsack dynamic program.

One cell maps the truncated table column f(., i-1) together with the
current item's (profit, size) to the column f(., i).  The weights are
hard-coded, not learned: integrality of profits lets a pair of opposed
rectifiers detect the profit value exactly, a quadratic block of
selector neurons routes the correct shifted table entry, and a final
rectifier realizes the two-way minimum of the recursion.  Iterating the
cell over the items therefore reproduces the dynamic program exactly,
up to double-precision accumulation of the item sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SizeGuardError
from .knapsack_oracles import (
    CAPACITY_TOL,
    DpTable,
    KnapsackInstance,
    Solution,
    backtrack,
)
from .relu_core import NetworkBuilder, ReluNetwork, affine_sum, unfold

__all__ = [
    "DpCell",
    "DpTrace",
    "build_dp_cell",
    "dp_unfolded_input",
    "run_recurrent",
    "solve_exact",
    "unfold_dp",
]

# n2 grows quadratically in the profit bound; past 2**20 the arc count
# leaves desk scale and 2*(p_in - k) would approach the exact range.
_MAX_P_STAR = 2**20


@dataclass(frozen=True)
class DpCell:
    """One dynamic-program step as a depth-4 network.

    Inputs: f_in(1..p_star), p_in, s_in  (p_star + 2 neurons).
    Hidden: 2*p_star profit gates, p_star*(p_star-1)/2 selectors,
            p_star minimum helpers.
    Outputs: f_out(1..p_star).

    The accessor methods map (p, k) coordinates to indices inside the
    corresponding hidden layer so tests can probe activations directly.
    """

    net: ReluNetwork
    p_star: int

    def idx_gate_plus(self, k: int) -> int:
        """Layer-1 neuron max(0, 2*(p_in - k))."""
        return k - 1

    def idx_gate_minus(self, k: int) -> int:
        """Layer-1 neuron max(0, 2*(k - p_in))."""
        return self.p_star + k - 1

    def idx_selector(self, p: int, k: int) -> int:
        """Layer-2 neuron carrying f_in(p - k) when k == p_in (k in [p-1])."""
        return (p - 1) * (p - 2) // 2 + (k - 1)

    def idx_min_helper(self, p: int) -> int:
        """Layer-3 neuron max(0, f_in(p) - s_in - selected)."""
        return p - 1

    def selector_slice(self, p: int) -> slice:
        return slice((p - 1) * (p - 2) // 2, (p - 1) * (p - 2) // 2 + (p - 1))


@lru_cache(maxsize=8)
def build_dp_cell(p_star: int) -> DpCell:
    """Construct the exact-step cell for profit bound p_star.

    Layer sizes are (2*p_star, p_star*(p_star-1)/2, p_star); for
    p_star = 1 the selector layer is empty and the cell degenerates to
    f_out(1) = min(f_in(1), s_in).  Cells are immutable, so recently
    built bounds are cached.
    """
    if not 1 <= p_star <= _MAX_P_STAR:
        raise ValueError(f"p_star must be in [1, {_MAX_P_STAR}]")
    b = NetworkBuilder(p_star + 2)
    refs = b.input_refs()
    f_in = refs[:p_star]  # f_in[p - 1] is f_in(p)
    p_in = refs[p_star]
    s_in = refs[p_star + 1]

    b.new_layer()
    gate_plus = [b.relu(2.0 * p_in - 2.0 * k) for k in range(1, p_star + 1)]
    gate_minus = [b.relu(2.0 * k - 2.0 * p_in) for k in range(1, p_star + 1)]

    b.new_layer()
    selector = {}
    for p in range(1, p_star + 1):
        for k in range(1, p):
            selector[p, k] = b.relu(
                f_in[p - k - 1] - gate_plus[k - 1] - gate_minus[k - 1]
            )

    b.new_layer()
    min_helper = []
    for p in range(1, p_star + 1):
        picked = affine_sum((selector[p, k] for k in range(1, p)), coeff=-1.0)
        min_helper.append(b.relu(f_in[p - 1] - s_in + picked))

    outputs = [f_in[p - 1] - min_helper[p - 1] for p in range(1, p_star + 1)]
    return DpCell(b.finish(outputs), p_star)


@dataclass(frozen=True)
class DpTrace:
    """State sequence of a recurrent run; states[i] is the column after i items.

    ``hidden[i]`` (when recorded) holds every layer's activations for
    step i + 1, as returned by ``ReluNetwork.evaluate_layers``.
    """

    states: list
    hidden: list | None = None

    def as_table(self, p_star: int) -> DpTable:
        values = np.zeros((p_star + 1, len(self.states)))
        values[1:, :] = np.column_stack(self.states)
        return DpTable(p_star, values)


def run_recurrent(cell: DpCell, inst: KnapsackInstance, record_hidden: bool = False) -> DpTrace:
    """Apply the cell once per item, threading the table column through.

    The initial state is (2, ..., 2).  Item profits above p_star are
    fine: no gate closes, so the cell computes min(f_in(p), s_in),
    matching the truncated recursion's convention for p - p_i <= 0.
    """
    state = np.full(cell.p_star, 2.0)
    states = [state]
    hidden = [] if record_hidden else None
    for p_i, s_i in zip(inst.profits, inst.sizes):
        x = np.concatenate([state, [float(p_i), s_i]])
        if record_hidden:
            layers = cell.net.evaluate_layers(x)
            hidden.append(layers)
            state = layers[-1]
        else:
            state = cell.net.evaluate(x)
        states.append(state)
    return DpTrace(states, hidden)


def solve_exact(inst: KnapsackInstance, p_star: int | None = None) -> Solution:
    """Optimal solution value (and a witness subset) via the network.

    ``p_star`` must upper-bound the optimum; it defaults to the total
    profit, which always does.  The value is the largest p whose final
    state entry is within tolerance of the capacity; the subset is
    recovered by backtracking over the stored state sequence.
    """
    if p_star is None:
        p_star = inst.total_profit
    cell = build_dp_cell(p_star)
    trace = run_recurrent(cell, inst)
    table = trace.as_table(p_star)
    final = trace.states[-1]
    ok = np.flatnonzero(final <= 1.0 + CAPACITY_TOL)
    if not ok.size:
        return Solution(0, (), 0.0)
    value = int(ok[-1]) + 1
    recovered = backtrack(table, inst, value)
    return Solution(value, recovered.items, recovered.total_size)


def unfold_dp(p_star: int, n: int) -> ReluNetwork:
    """Feedforward network executing n dynamic-program steps (depth 4n).

    All p_star state outputs feed back onto the state inputs, so the
    unfolded input layout is the initial column (2, ..., 2) followed by
    the item stream p_1, s_1, ..., p_n, s_n; see :func:`dp_unfolded_input`.
    """
    if n < 1:
        raise ValueError("need at least one step")
    if n * p_star * p_star > 10**9:
        raise SizeGuardError("unfolded network would be unreasonably large")
    cell = build_dp_cell(p_star)
    return unfold(cell.net, n, {o: o for o in range(p_star)})


def dp_unfolded_input(inst: KnapsackInstance, p_star: int) -> np.ndarray:
    """Input vector for :func:`unfold_dp`: initial state then the item stream."""
    parts = [np.full(p_star, 2.0)]
    for p_i, s_i in zip(inst.profits, inst.sizes):
        parts.append(np.array([float(p_i), s_i]))
    return np.concatenate(parts)
