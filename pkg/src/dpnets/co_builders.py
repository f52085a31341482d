"""Exact-weight networks for further dynamic programs, with classical oracles.

Each construction pairs a network builder/runner with an independent
classical implementation of the same recursion:

* longest common subsequence -- constant-size cell applied on an m-by-n grid;
* single-source shortest paths -- one relaxation round as a cell of
  parallel minimum trees, applied n-1 times;
* all-pairs shortest paths -- one min-plus matrix squaring as a cell,
  applied ceil(log2(n-1)) times;
* length-indexed constrained shortest paths -- profit-gate selection
  (as in the knapsack cell) combined with minimum trees;
* traveling salesperson -- the subset dynamic program layered by
  cardinality, distances fed as inputs.

Networks cannot hold infinity, so "no path" is represented by the
surrogate BIG = 2 * (n * max|entry| + 1); minimum steps only ever
decrease values, so BIG never contaminates finite results and anything
at or above BIG still means unreachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .errors import SizeGuardError
from .relu_core import (
    Affine,
    NetworkBuilder,
    ReluNetwork,
    affine_sum,
    max_pair,
    min_reduce_many,
)

__all__ = [
    "CspNetwork",
    "IntSequencePair",
    "TspNetwork",
    "WeightedGraph",
    "bellman_ford_distances",
    "big_value",
    "build_bellman_ford_cell",
    "build_csp_network",
    "build_lcs_cell",
    "build_min_plus_square_cell",
    "build_tsp_network",
    "enumerate_csp_lengths",
    "floyd_warshall",
    "lcs_length",
    "run_apsp",
    "run_bellman_ford",
    "run_csp",
    "run_lcs",
    "run_tsp",
    "tsp_input_vector",
]

RESOURCE_TOL = 1e-9


# -- domain types ------------------------------------------------------------


@dataclass(frozen=True)
class WeightedGraph:
    """Dense digraph: length matrix, optional resource matrix, source vertex."""

    lengths: np.ndarray
    resources: np.ndarray | None = None
    source: int = 0

    def __post_init__(self):
        lengths = np.array(self.lengths, dtype=np.float64)
        if lengths.ndim != 2 or lengths.shape[0] != lengths.shape[1]:
            raise ValueError("length matrix must be square")
        if lengths.shape[0] < 2:
            raise ValueError("need at least two vertices")
        if not np.all(np.isfinite(lengths)):
            raise ValueError("lengths must be finite")
        lengths.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        if self.resources is not None:
            res = np.array(self.resources, dtype=np.float64)
            if res.shape != lengths.shape:
                raise ValueError("resource matrix shape mismatch")
            if not np.all(np.isfinite(res)) or (res < 0).any():
                raise ValueError("resources must be finite and non-negative")
            res.setflags(write=False)
            object.__setattr__(self, "resources", res)
        if not 0 <= self.source < lengths.shape[0]:
            raise ValueError("source out of range")

    @property
    def n(self) -> int:
        return self.lengths.shape[0]

    def to_json_dict(self) -> dict:
        doc = {"n": self.n, "lengths": self.lengths.tolist(), "source": self.source}
        if self.resources is not None:
            doc["resources"] = self.resources.tolist()
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "WeightedGraph":
        return cls(doc["lengths"], doc.get("resources"), doc.get("source", 0))


@dataclass(frozen=True)
class IntSequencePair:
    """Two finite integer sequences (the equality gates require integrality)."""

    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", _int_sequence(self.x, "x"))
        object.__setattr__(self, "y", _int_sequence(self.y, "y"))
        if not self.x or not self.y:
            raise ValueError("sequences must be non-empty")

    @property
    def m(self) -> int:
        return len(self.x)

    @property
    def n(self) -> int:
        return len(self.y)

    def to_json_dict(self) -> dict:
        return {"x": list(self.x), "y": list(self.y)}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "IntSequencePair":
        return cls(tuple(doc["x"]), tuple(doc["y"]))


def _int_sequence(xs, name):
    out = []
    for v in xs:
        if isinstance(v, bool):
            raise ValueError(f"{name} entries must be integers")
        if isinstance(v, (int, np.integer)):
            out.append(int(v))
        elif isinstance(v, float) and v.is_integer():
            out.append(int(v))
        else:
            raise ValueError(f"{name} entry {v!r} is not integral")
    return tuple(out)


def big_value(matrix) -> float:
    """Unreachable-surrogate for a length/resource matrix: 2*(n*max|entry| + 1)."""
    m = np.asarray(matrix, dtype=np.float64)
    return 2.0 * (m.shape[0] * float(np.max(np.abs(m))) + 1.0)


# -- longest common subsequence ----------------------------------------------


def lcs_length(x, y) -> int:
    """Classical quadratic table for the longest common subsequence length."""
    m, n = len(x), len(y)
    f = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if x[i - 1] == y[j - 1]:
                f[i][j] = f[i - 1][j - 1] + 1
            else:
                f[i][j] = max(f[i - 1][j], f[i][j - 1])
    return f[m][n]


def build_lcs_cell(value_bound: int) -> ReluNetwork:
    """Constant-size cell for one grid point of the subsequence table.

    Inputs (f_diag, f_up, f_left, x, y); output f_diag + 1 when x == y,
    else max(f_up, f_left).  Equality of the integer symbols is detected
    by an opposed rectifier pair with gate weight 2 * (value_bound + 1),
    which dominates every admissible table value, so the match branch is
    shut off exactly on a mismatch.  Valid whenever table values stay in
    [0, value_bound] and neighbors obey f_up, f_left <= f_diag + 1 (true
    for subsequence tables).  Layers (5, 3, 1, 1): depth 3, width 3, size 4.
    """
    if value_bound < 1:
        raise ValueError("value_bound must be >= 1")
    gate = 2.0 * (value_bound + 1)
    b = NetworkBuilder(5)
    f_diag, f_up, f_left, x, y = b.input_refs()
    b.new_layer()
    eq_plus = b.relu(gate * x - gate * y)
    eq_minus = b.relu(gate * y - gate * x)
    best_old = max_pair(b, f_up, f_left)
    b.new_layer()
    match = b.relu(f_diag + 1.0 - best_old - eq_plus - eq_minus)
    return b.finish([best_old + match])


def run_lcs(pair: IntSequencePair) -> int:
    """Grid application of the cell over i in [m], j in [n]; boundary rows 0."""
    cell = build_lcs_cell(max(pair.m, pair.n))
    f = np.zeros((pair.m + 1, pair.n + 1))
    for i in range(1, pair.m + 1):
        for j in range(1, pair.n + 1):
            out = cell.evaluate(
                [f[i - 1, j - 1], f[i - 1, j], f[i, j - 1], float(pair.x[i - 1]), float(pair.y[j - 1])]
            )
            f[i, j] = out[0]
    return int(round(f[pair.m, pair.n]))


# -- single-source shortest paths (Bellman-Ford) ------------------------------


def bellman_ford_distances(graph: WeightedGraph, rounds: int | None = None):
    """Distances by the textbook recursion d'(v) = min_u(d(u) + c(u, v)).

    Unreached vertices carry math.inf.  The zero diagonal makes the
    recursion non-increasing (the u = v term keeps the current value).
    """
    n, c = graph.n, graph.lengths
    dist = [math.inf] * n
    dist[graph.source] = 0.0
    for _ in range(n - 1 if rounds is None else rounds):
        dist = [min(dist[u] + c[u][v] for u in range(n)) for v in range(n)]
    return np.asarray(dist)


def build_bellman_ford_cell(graph: WeightedGraph) -> ReluNetwork:
    """One relaxation round: state f(., i-1) in R^n to f(., i).

    The arc lengths are baked into the cell as biases; vertex v's new
    value is the minimum of n affine shifts, realized by a fused tree of
    pairwise minima.  Depth ceil(log2(n)) + 1, size n * (n - 1),
    width n * floor(n / 2).
    """
    n = graph.n
    b = NetworkBuilder(n)
    f_prev = b.input_refs()
    groups = [[f_prev[u] + float(graph.lengths[u][v]) for u in range(n)] for v in range(n)]
    outs = min_reduce_many(b, groups)
    return b.finish(outs)


def run_bellman_ford(graph: WeightedGraph, rounds: int | None = None) -> np.ndarray:
    """Network distances from the source after n - 1 relaxation rounds.

    The initial state is 0 at the source and BIG elsewhere; results at
    or above BIG mean "not reachable within the given rounds".
    """
    n = graph.n
    if not np.all(np.diag(graph.lengths) == 0.0):
        raise ValueError("relaxation rounds need a zero diagonal")
    cell = build_bellman_ford_cell(graph)
    big = big_value(graph.lengths)
    state = np.full(n, big)
    state[graph.source] = 0.0
    for _ in range(n - 1 if rounds is None else rounds):
        state = cell.evaluate(state)
    return state


# -- all-pairs shortest paths via min-plus squaring ----------------------------


def floyd_warshall(lengths) -> np.ndarray:
    """Classical all-pairs table; entries are plain numbers (use BIG, not inf)."""
    d = np.array(lengths, dtype=np.float64)
    n = d.shape[0]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                via = d[i, k] + d[k, j]
                if via < d[i, j]:
                    d[i, j] = via
    return d


def build_min_plus_square_cell(n: int) -> ReluNetwork:
    """One min-plus matrix squaring: d'(u, v) = min_k(d(u, k) + d(k, v)).

    Inputs and outputs are the row-major flattened n x n matrix; the
    n**2 minima over n sums run in parallel.  Depth ceil(log2(n)) + 1,
    size n**2 * (n - 1).
    """
    if n < 2:
        raise ValueError("need at least two vertices")
    b = NetworkBuilder(n * n)
    d = b.input_refs()
    groups = [
        [d[u * n + k] + d[k * n + v] for k in range(n)]
        for u in range(n)
        for v in range(n)
    ]
    outs = min_reduce_many(b, groups)
    return b.finish(outs)


def run_apsp(graph: WeightedGraph) -> np.ndarray:
    """All-pairs distances by repeated squaring (ceil(log2(n-1)) applications).

    Requires a zero diagonal and no negative cycles (the runner does not
    detect them); missing edges should be encoded as BIG.
    """
    n = graph.n
    if not np.all(np.diag(graph.lengths) == 0.0):
        raise ValueError("min-plus powers need a zero diagonal")
    state = graph.lengths.flatten()
    if n > 2:
        cell = build_min_plus_square_cell(n)
        for _ in range(math.ceil(math.log2(n - 1))):
            state = cell.evaluate(state)
    return state.reshape(n, n)


# -- constrained shortest paths ------------------------------------------------


def enumerate_csp_lengths(graph: WeightedGraph, limit, tol: float = RESOURCE_TOL) -> dict:
    """Oracle: per vertex, the least path length whose resource stays within
    `limit`, by exhaustive DFS over simple paths from the source.

    Cycles never help (lengths >= 1, resources >= 0), so simple paths
    suffice.  Returns {vertex: int length or None}; the source maps to 0.
    """
    n, s = graph.n, graph.source
    if graph.resources is None:
        raise ValueError("graph has no resource matrix")
    c, r = graph.lengths, graph.resources
    best: dict = {v: None for v in range(n)}
    best[s] = 0

    def dfs(v, visited, length, resource):
        for u in range(n):
            if u == s or u in visited:
                continue
            nl = length + c[v][u]
            nr = resource + r[v][u]
            if nr > limit + tol:
                continue
            if best[u] is None or nl < best[u]:
                best[u] = nl
            dfs(u, visited | {u}, nl, nr)

    dfs(s, {s}, 0.0, 0.0)
    return {v: (d if d is None else int(round(d))) for v, d in best.items()}


@dataclass(frozen=True)
class CspNetwork:
    """Length-indexed constrained-shortest-path network.

    Takes the length and resource matrices as inputs (row-major off-
    diagonal entries, lengths first) and outputs the truncated table
    f(c, v) = least resource of a source-to-v path of length at most c,
    for c in [c_star] and every non-source v, in c-major order.  BIG_R
    is the resource infinity surrogate; entries at or above it mean "no
    such path".  Valid while resource entries stay within
    ``resource_bound``.
    """

    net: ReluNetwork
    n: int
    c_star: int
    source: int
    big_r: float
    resource_bound: float

    @property
    def targets(self):
        return [v for v in range(self.n) if v != self.source]

    def output_index(self, c: int, v: int) -> int:
        return (c - 1) * (self.n - 1) + self.targets.index(v)

    def input_vector(self, graph: WeightedGraph) -> np.ndarray:
        off = _offdiag(graph.lengths)
        return np.concatenate([off, _offdiag(graph.resources)])


def _offdiag(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    n = m.shape[0]
    return np.array([m[u, v] for u in range(n) for v in range(n) if u != v])


def build_csp_network(n: int, c_star: int, resource_bound: float, source: int = 0) -> CspNetwork:
    """Network executing f(c, v) = min(f(c-1, v), min_u(f(c - c_uv, u) + r_uv)).

    The arc length c_uv is an input, so which earlier table entry the
    recursion reads is decided by integer gates exactly as in the
    knapsack cell -- except that here an unmatched gate must default to
    BIG_R ("no path"), not 0, so the selector is the complement form
    BIG_R - sum(keeps).  Edges from the source use the constant base row
    f(., source) = 0; lengths beyond c_star simply never match a gate.
    """
    if n < 2:
        raise ValueError("need at least two vertices")
    if c_star < 1:
        raise ValueError("c_star must be >= 1")
    if resource_bound < 0:
        raise ValueError("resource_bound must be non-negative")
    if not 0 <= source < n:
        raise ValueError("source out of range")
    if n * n * c_star * c_star > 10**8:
        raise SizeGuardError("state space too large")
    big_r = 2.0 * (n * float(resource_bound) + 1.0)
    gate = 2.0 * big_r
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    pair_pos = {uv: i for i, uv in enumerate(pairs)}

    b = NetworkBuilder(2 * len(pairs))
    refs = b.input_refs()

    def c_ref(u, v):
        return refs[pair_pos[u, v]]

    def r_ref(u, v):
        return refs[len(pairs) + pair_pos[u, v]]

    targets = [v for v in range(n) if v != source]
    b.new_layer()
    gates = {}
    for u, v in pairs:
        if v == source:
            continue
        for k in range(1, c_star + 1):
            gates[u, v, k] = (
                b.relu(gate * c_ref(u, v) - gate * k),
                b.relu(gate * k - gate * c_ref(u, v)),
            )

    f: dict = {}

    def table(c, v):
        if v == source:
            return Affine.constant(0.0)
        if c <= 0:
            return Affine.constant(big_r)
        return f[c, v]

    for c in range(1, c_star + 1):
        b.new_layer()
        hop = {}
        for v in targets:
            for u in range(n):
                if u == v:
                    continue
                kmax = min(c if u == source else c - 1, c_star)
                keeps = []
                for k in range(1, kmax + 1):
                    plus, minus = gates[u, v, k]
                    keeps.append(b.relu(big_r - table(c - k, u) - plus - minus))
                hop[u, v] = affine_sum(keeps, coeff=-1.0, const=big_r)
        groups = [
            [table(c - 1, v)]
            + [hop[u, v] + r_ref(u, v) for u in range(n) if u != v]
            + [Affine.constant(big_r)]
            for v in targets
        ]
        for v, expr in zip(targets, min_reduce_many(b, groups)):
            f[c, v] = expr

    outputs = [f[c, v] for c in range(1, c_star + 1) for v in targets]
    return CspNetwork(b.finish(outputs), n, c_star, source, big_r, float(resource_bound))


def run_csp(graph: WeightedGraph, c_star: int, limit) -> dict:
    """Per vertex, the least length budget c in [c_star] whose minimal
    resource f(c, v) stays within `limit`; None when no budget works.

    Lengths must be integers >= 1 off the diagonal (the table is indexed
    by length); `limit` must lie below the BIG_R surrogate.
    """
    n = graph.n
    if graph.resources is None:
        raise ValueError("constrained shortest paths need a resource matrix")
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            c = graph.lengths[u, v]
            if c != round(c) or c < 1:
                raise ValueError(f"length {c} at ({u}, {v}) is not a positive integer")
    resource_bound = float(np.max(graph.resources))
    network = build_csp_network(n, c_star, resource_bound, graph.source)
    if not 0 <= limit < network.big_r:
        raise ValueError(f"resource limit must lie in [0, {network.big_r})")
    out = network.net.evaluate(network.input_vector(graph))
    answers: dict = {graph.source: 0}
    for v in network.targets:
        answers[v] = None
        for c in range(1, c_star + 1):
            if out[network.output_index(c, v)] <= limit + RESOURCE_TOL:
                answers[v] = c
                break
    return answers


# -- traveling salesperson -----------------------------------------------------


def tsp_brute_force(dist) -> float:
    """Shortest directed round trip by enumerating all (n-1)! permutations."""
    d = np.asarray(dist, dtype=np.float64)
    n = d.shape[0]
    if n > 10:
        raise SizeGuardError(f"permutation enumeration refuses n = {n} > 10")
    best = math.inf
    for order in permutations(range(1, n)):
        length = d[0, order[0]]
        for a, bb in zip(order, order[1:]):
            length += d[a, bb]
        length += d[order[-1], 0]
        best = min(best, length)
    return float(best)


@dataclass(frozen=True)
class TspNetwork:
    """Subset-DP tour-length network; distances are inputs (off-diagonal,
    row-major), the single output is the optimal tour length."""

    net: ReluNetwork
    n: int

    def input_vector(self, dist) -> np.ndarray:
        d = np.asarray(dist, dtype=np.float64)
        if d.shape != (self.n, self.n):
            raise ValueError("distance matrix shape mismatch")
        return _offdiag(d)


def build_tsp_network(n: int) -> TspNetwork:
    """All path values f(T, v) computed per cardinality layer, in parallel.

    f(T, v) is the shortest path from the start vertex through exactly
    the vertex set T, ending at v in T; the recursion minimizes over the
    predecessor.  Tours close with min_u(f(all, u) + c(u, start)).
    Guarded at n <= 16 (there are 2**(n-1) subsets).
    """
    if n < 2:
        raise SizeGuardError("a tour needs at least two vertices")
    if n > 16:
        raise SizeGuardError(f"subset table for n = {n} > 16 is too large")
    b = NetworkBuilder(n * (n - 1))
    refs = b.input_refs()

    def c(u, v):
        return refs[u * (n - 1) + (v - 1 if v > u else v)]

    f = {}
    for v in range(1, n):
        f[1 << (v - 1), v] = c(0, v)
    for t in range(2, n):
        entries = []
        groups = []
        for combo in combinations(range(1, n), t):
            mask = 0
            for v in combo:
                mask |= 1 << (v - 1)
            for v in combo:
                prev = mask ^ (1 << (v - 1))
                entries.append((mask, v))
                groups.append([f[prev, u] + c(u, v) for u in combo if u != v])
        for key, expr in zip(entries, min_reduce_many(b, groups)):
            f[key] = expr
    full = (1 << (n - 1)) - 1
    closing = [f[full, u] + c(u, 0) for u in range(1, n)]
    tour = min_reduce_many(b, [closing])[0]
    return TspNetwork(b.finish([tour]), n)


def tsp_input_vector(dist) -> np.ndarray:
    return _offdiag(dist)


def run_tsp(dist) -> float:
    """Optimal tour length of a complete directed distance matrix."""
    d = np.asarray(dist, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite")
    network = build_tsp_network(d.shape[0])
    return float(network.net.evaluate(network.input_vector(d))[0])
