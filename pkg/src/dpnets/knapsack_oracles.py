"""Classical knapsack algorithms used as ground truth.

Profit-indexed dynamic program (truncated at 2, the stand-in for +inf
since the capacity is normalized to 1), brute-force subset enumeration,
the rounded reference recursion behind the approximation scheme, and
subset recovery by backtracking.  Everything here is a plain direct
implementation, deliberately independent of the network constructions
it is used to check.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleTargetError, NumericOverflowError, SizeGuardError

__all__ = [
    "CAPACITY_TOL",
    "DpTable",
    "FptasTable",
    "KnapsackInstance",
    "Solution",
    "backtrack",
    "brute_force",
    "ceil_div",
    "coarse_index",
    "coarse_index_with_item",
    "dp_table",
    "fptas_reference",
    "optimum_value",
    "subset_profiles",
]

# Feasibility slack for "total size <= 1" checks.  Sizes are arbitrary
# doubles and a table entry accumulates at most n additions, each exact
# to an ulp; 1e-9 is orders of magnitude above that.
CAPACITY_TOL = 1e-9

# Profits this large would break the exactness of the integer-valued
# pre-activations inside the constructed networks.
_MAX_PROFIT = 2**51


@dataclass(frozen=True)
class KnapsackInstance:
    """n items with integer profits >= 1 and sizes in ]0, 1]; capacity is 1."""

    profits: tuple
    sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "profits", tuple(self.profits))
        object.__setattr__(self, "sizes", tuple(float(s) for s in self.sizes))
        if len(self.profits) != len(self.sizes):
            raise ValueError("profits and sizes must have equal length")
        if len(self.profits) < 1:
            raise ValueError("an instance needs at least one item")
        for p in self.profits:
            if isinstance(p, bool) or not isinstance(p, (int, np.integer)):
                raise ValueError(f"profit {p!r} is not an integer")
            if not 1 <= p < _MAX_PROFIT:
                raise ValueError(f"profit {p} out of range [1, 2**51)")
        for s in self.sizes:
            if not (0.0 < s <= 1.0):
                raise ValueError(f"size {s} outside ]0, 1]")
        object.__setattr__(self, "profits", tuple(int(p) for p in self.profits))

    @property
    def n(self) -> int:
        return len(self.profits)

    @property
    def total_profit(self) -> int:
        return sum(self.profits)

    def to_json_dict(self) -> dict:
        return {"profits": list(self.profits), "sizes": list(self.sizes)}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "KnapsackInstance":
        profits = []
        for p in doc["profits"]:
            if isinstance(p, float):
                if not p.is_integer():
                    raise ValueError(f"profit {p} is not integral")
                p = int(p)
            profits.append(p)
        return cls(tuple(profits), tuple(doc["sizes"]))


@dataclass(frozen=True)
class Solution:
    """Objective value, chosen item subset (sorted 0-based indices), and its size."""

    value: float
    items: tuple
    total_size: float


def _csv_of(values: np.ndarray) -> str:
    """Rows = profit index p, columns = item count i."""
    buf = io.StringIO()
    n_cols = values.shape[1]
    buf.write("p," + ",".join(f"i{i}" for i in range(n_cols)) + "\n")
    for p in range(1, values.shape[0]):
        buf.write(str(p) + "," + ",".join(repr(float(v)) for v in values[p]) + "\n")
    return buf.getvalue()


@dataclass(frozen=True)
class DpTable:
    """Truncated table f(p, i) for p in [p_star], i in 0..n.

    Row 0 holds the convention f(p, 0 or less) = 0 for p <= 0; column 0
    holds the starting value 2 for every p >= 1.  Values never exceed
    2 and are strictly positive for p >= 1 because every size is.
    """

    p_star: int
    values: np.ndarray  # shape (p_star + 1, n + 1)

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def n_items(self) -> int:
        return self.values.shape[1] - 1

    def to_csv(self) -> str:
        return _csv_of(self.values)


@dataclass(frozen=True)
class FptasTable:
    """Rounded table g(p, i) for p in [P] with running profit sums.

    ``p_star_sums[i]`` is the total profit of the first i items; the
    rounding granularity at step i is ``max(1, p_star_sums[i] / P)``,
    kept here in the exactly-representable scaled form
    ``max(P, p_star_sums[i])`` (an integer).
    """

    resolution: int  # P
    values: np.ndarray  # shape (P + 1, n + 1); row 0 unused
    p_star_sums: tuple

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def n_items(self) -> int:
        return self.values.shape[1] - 1

    def scaled_granularity(self, i: int) -> int:
        """P times the rounding granularity after i items (an integer)."""
        return max(self.resolution, self.p_star_sums[i])

    def granularity(self, i: int) -> float:
        return self.scaled_granularity(i) / self.resolution

    def best_row(self, tol: float = CAPACITY_TOL) -> int:
        """Largest p with g(p, n) <= 1 + tol, or 0 if none qualifies."""
        final = self.values[1:, -1]
        ok = np.flatnonzero(final <= 1.0 + tol)
        return int(ok[-1]) + 1 if ok.size else 0

    def best_guaranteed_profit(self, tol: float = CAPACITY_TOL) -> float:
        """max{p * d_n : g(p, n) <= 1 + tol}, or 0.0."""
        p = self.best_row(tol)
        return p * self.scaled_granularity(self.n_items) / self.resolution

    def to_csv(self) -> str:
        return _csv_of(self.values)


# -- exact dynamic program ---------------------------------------------------


def dp_table(inst: KnapsackInstance, p_star: int) -> DpTable:
    """Profit-indexed table: f(p, i) = min size of a subset of the first i
    items with profit at least p, truncated at 2.

    f(p, i) = min(f(p, i-1), f(p - p_i, i-1) + s_i) with f(p, 0) = 2 and
    f(p, i) = 0 for p <= 0.  ``p_star`` need not bound the optimum; item
    profits above it simply shift out of the table.  Runs in O(n * p_star).
    """
    if p_star < 1:
        raise ValueError("p_star must be >= 1")
    n = inst.n
    v = np.empty((p_star + 1, n + 1))
    v[0, :] = 0.0
    v[1:, 0] = 2.0
    for i in range(1, n + 1):
        p_i, s_i = inst.profits[i - 1], inst.sizes[i - 1]
        prev = v[:, i - 1]
        shifted = np.zeros(p_star + 1)
        if p_i <= p_star:
            shifted[p_i:] = prev[: p_star + 1 - p_i]
        v[:, i] = np.minimum(prev, shifted + s_i)
        v[0, i] = 0.0
    return DpTable(p_star, v)


def optimum_value(table: DpTable, tol: float = CAPACITY_TOL) -> int:
    """max{p in [p_star] : f(p, n) <= 1 + tol}, or 0 if nothing fits."""
    final = table.values[1:, -1]
    ok = np.flatnonzero(final <= 1.0 + tol)
    return int(ok[-1]) + 1 if ok.size else 0


# -- brute force -------------------------------------------------------------


def subset_profiles(profits, sizes):
    """(profit, size) of every subset of the given items, indexed by bitmask.

    Built by doubling: entry m covers the items in mask m.  Useful for
    vectorized witness searches over prefixes of an instance.
    """
    prof = np.zeros(1, dtype=np.int64)
    size = np.zeros(1)
    for p, s in zip(profits, sizes):
        prof = np.concatenate([prof, prof + p])
        size = np.concatenate([size, size + s])
    return prof, size


def brute_force(inst: KnapsackInstance) -> Solution:
    """Enumerate all subsets; return the max-profit one of size <= 1.

    Ties are broken toward the lexicographically smallest index set.
    Guarded at n <= 25 (the enumeration is exponential).
    """
    n = inst.n
    if n > 25:
        raise SizeGuardError(f"brute force refuses n = {n} > 25")
    prof, size = subset_profiles(inst.profits, inst.sizes)
    feasible = size <= 1.0 + CAPACITY_TOL
    best_profit = int(prof[feasible].max())
    candidates = np.flatnonzero(feasible & (prof == best_profit))
    best_items = None
    for mask in candidates.tolist():
        items = tuple(i for i in range(n) if mask >> i & 1)
        if best_items is None or items < best_items:
            best_items = items
    total = float(sum(inst.sizes[i] for i in best_items))
    return Solution(best_profit, best_items, total)


# -- rounded reference recursion ---------------------------------------------


def ceil_div(a: int, b: int) -> int:
    """ceil(a / b) for integer a and positive integer b."""
    return -((-a) // b)


def coarse_index(p: int, d_old_scaled: int, d_new_scaled: int) -> int:
    """Smallest integer q with q * d_old >= p * d_new (granularities scaled by P)."""
    return ceil_div(p * d_new_scaled, d_old_scaled)


def coarse_index_with_item(
    p: int, profit: int, resolution: int, d_old_scaled: int, d_new_scaled: int
) -> int:
    """Smallest integer q with q * d_old + profit >= p * d_new; may be <= 0."""
    return ceil_div(p * d_new_scaled - profit * resolution, d_old_scaled)


def _check_exact_range(inst: KnapsackInstance, resolution: int):
    total, biggest = inst.total_profit, max(inst.profits)
    if 2 * resolution * (total + biggest + resolution) >= 2**52:
        raise NumericOverflowError(
            "profit magnitudes too large for exact double-precision comparisons "
            f"(need 2*P*(sum+max+P) < 2**52, got P={resolution}, sum={total})"
        )


def fptas_reference(inst: KnapsackInstance, resolution: int) -> FptasTable:
    """Direct implementation of the rounded recursion at resolution P.

    For each step i and row p, let d_old/d_new be the granularities
    before/after item i and let p1 (p2) be the smallest integers with
    p1*d_old >= p*d_new (p2*d_old + p_i >= p*d_new).  Then

        g(p, i) = min(h1, s_i + h2),
        h1 = g(p1, i-1) if p1 <= P else 2,
        h2 = g(p2, i-1) if p2 >= 1 else 0,

    with g(p, 0) = 2.  Granularities are handled as the exact integers
    P * d = max(P, running profit sum), so the index computations never
    touch floating point.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    _check_exact_range(inst, resolution)
    P = resolution
    n = inst.n
    g = np.empty((P + 1, n + 1))
    g[:, 0] = 2.0
    g[0, :] = 0.0  # row 0 is never read through p1/p2 indexing; keep it inert
    sums = [0]
    for p_i in inst.profits:
        sums.append(sums[-1] + p_i)
    rows = np.arange(1, P + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p_i, s_i = inst.profits[i - 1], inst.sizes[i - 1]
        d_old = max(P, sums[i - 1])
        d_new = max(P, sums[i])
        p1 = -((-(rows * d_new)) // d_old)
        p2 = -((-(rows * d_new - p_i * P)) // d_old)
        h1 = np.where(p1 <= P, g[np.minimum(p1, P), i - 1], 2.0)
        h2 = np.where(p2 >= 1, g[np.maximum(p2, 0), i - 1], 0.0)
        g[1:, i] = np.minimum(h1, s_i + h2)
    return FptasTable(P, g, tuple(sums))


# -- subset recovery ----------------------------------------------------------


def backtrack(table: DpTable, inst: KnapsackInstance, target_p: int) -> Solution:
    """Recover an item subset achieving profit >= target_p from a table.

    Walking i = n..1, item i is included exactly when the take-branch was
    strictly better: f(p, i) < f(p, i-1) - tol.  On ties the item is left
    out, which yields minimal-cardinality witnesses and deterministic
    output.  The subset's total size is at most f(target_p, n) + n * tol.
    """
    if not 1 <= target_p <= table.p_star:
        raise ValueError(f"target profit {target_p} outside [1, {table.p_star}]")
    if table.n_items != inst.n:
        raise ValueError("table and instance disagree on item count")
    if table.values[target_p, -1] > 1.0 + CAPACITY_TOL:
        raise InfeasibleTargetError(
            f"no subset of size <= 1 reaches profit {target_p}"
        )
    v = table.values
    items = []
    p = target_p
    for i in range(inst.n, 0, -1):
        if p <= 0:
            break
        if v[p, i] < v[p, i - 1] - CAPACITY_TOL:
            items.append(i - 1)
            p = max(p - inst.profits[i - 1], 0)
    items = tuple(sorted(items))
    total = float(sum(inst.sizes[i] for i in items))
    profit = sum(inst.profits[i] for i in items)
    return Solution(profit, items, total)
