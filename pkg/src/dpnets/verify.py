"""Property suites: activation dichotomies and oracle equivalence.

Each suite returns a :class:`SuiteResult` with check/failure counts so
that the command line can print per-suite summaries and exit nonzero on
any failure.  The probe helpers are also reused by the test suite.

Probe values live on the 2**-26 grid (like generated instances), where
every sum the networks form is exactly representable, so the zero-
versus-large activation dichotomies and the selected-value identities
can be asserted with equality rather than tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import co_builders, dp_nn, fptas_nn, instance_gen, knapsack_oracles
from .instance_gen import GRID_QUANTUM, GenConfig, SplitMix64
from .knapsack_oracles import (
    KnapsackInstance,
    brute_force,
    coarse_index,
    coarse_index_with_item,
    dp_table,
    fptas_reference,
)
from .relu_core import ReluNetwork, min2_gadget, min_n_gadget, unfold

__all__ = [
    "SuiteResult",
    "capped_instance",
    "grid_values",
    "probe_dp_cell",
    "probe_fptas_cell",
    "run_suite",
    "suite_names",
]


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: int = 0
    messages: list = field(default_factory=list)

    def ok(self, condition: bool, message: str = ""):
        self.checks += 1
        if not condition:
            self.failures += 1
            if message and len(self.messages) < 20:
                self.messages.append(message)

    @property
    def passed(self) -> bool:
        return self.failures == 0


def grid_values(rng: SplitMix64, count: int, low_steps: int, high_steps: int) -> np.ndarray:
    """`count` uniform multiples of 2**-26 with step counts in [low, high]."""
    return np.array(
        [rng.randint(low_steps, high_steps) * GRID_QUANTUM for _ in range(count)]
    )


def capped_instance(seed: int, p_star: int, max_items: int) -> KnapsackInstance:
    """Deterministically find a generated instance with at most `max_items` items."""
    bump = 0
    while True:
        inst = instance_gen.gen_knapsack(GenConfig(seed + bump * 0x9E3779B9, p_star))
        if inst.n <= max_items:
            return inst
        bump += 1


# -- probe helpers -------------------------------------------------------------


def probe_dp_cell(cell: dp_nn.DpCell, rng: SplitMix64, evals: int, result: SuiteResult,
                  counters: dict | None = None):
    """Random-input activation probes of the exact-step cell.

    Checks, per evaluation and per coordinate: the profit-gate pair is 0
    exactly at k = p_in and >= 2 elsewhere; the selector row carries
    exactly f_in(p - p_in) (else 0); the minimum helper equals the
    positive part of the branch difference; and the outputs equal the
    recursion minimum.
    """
    p_star = cell.p_star
    c = counters if counters is not None else {}
    for key in ("gates", "selection", "minimum"):
        c.setdefault(key, 0)
    for i in range(evals):
        p_in = 1 + i % (p_star + 3)  # cycle through all values, incl. beyond the bound
        f_in = grid_values(rng, p_star, 1, 2**27)  # ]0, 2]
        s_in = rng.randint(1, 2**26) * GRID_QUANTUM  # ]0, 1]
        x = np.concatenate([f_in, [float(p_in), s_in]])
        layers = cell.net.evaluate_layers(x)
        l1, l2, l3 = layers[1], layers[2], layers[3]
        for k in range(1, p_star + 1):
            pair = l1[cell.idx_gate_plus(k)] + l1[cell.idx_gate_minus(k)]
            if k == p_in:
                result.ok(pair == 0.0, f"gate pair nonzero at k == p_in == {k}")
            else:
                result.ok(pair >= 2.0, f"gate pair below 2 at k={k}, p_in={p_in}")
            c["gates"] += 1
        for p in range(1, p_star + 1):
            for k in range(1, p):
                got = l2[cell.idx_selector(p, k)]
                want = f_in[p - k - 1] if k == p_in else 0.0
                result.ok(got == want, f"selector ({p},{k}) = {got}, want {want}")
                c["selection"] += 1
        for p in range(1, p_star + 1):
            if p_in < p:
                shifted = f_in[p - p_in - 1]
            else:
                shifted = 0.0
            want = max(0.0, f_in[p - 1] - (shifted + s_in))
            got = l3[cell.idx_min_helper(p)]
            result.ok(got == want, f"min helper ({p}) = {got}, want {want}")
            want_out = min(f_in[p - 1], shifted + s_in)
            result.ok(layers[-1][p - 1] == want_out, f"output ({p}) off")
            c["minimum"] += 1


def probe_fptas_cell(cell: fptas_nn.FptasCell, rng: SplitMix64, evals: int,
                     result: SuiteResult, counters: dict | None = None):
    """Random-input activation probes of the rounded-step cell.

    Checks the scaled granularities, the two selector-gate dichotomies
    against integer-arithmetic re-indexing, the selected values h1 / h2
    including their out-of-range defaults (2 and 0), and the output
    minimum identity.
    """
    P = cell.resolution
    c = counters if counters is not None else {}
    for key in ("granularity", "skip_gates", "take_gates", "selected", "minimum"):
        c.setdefault(key, 0)
    for _ in range(evals):
        total_in = rng.randint(0, 3 * P)
        p_in = rng.randint(1, 2 * P + 1)
        g_in = grid_values(rng, P, 0, 2**27)  # [0, 2]
        s_in = rng.randint(1, 2**26) * GRID_QUANTUM
        x = np.concatenate([g_in, [float(total_in), float(p_in), s_in]])
        layers = cell.net.evaluate_layers(x)
        l1, l2, l3 = layers[1], layers[2], layers[3]

        result.ok(l1[0] == max(0, total_in - P), "old granularity gate off")
        result.ok(l1[1] == max(0, total_in + p_in - P), "new granularity gate off")
        c["granularity"] += 2

        d_old = max(P, total_in)
        d_new = max(P, total_in + p_in)
        for p in range(1, P + 1):
            p1 = coarse_index(p, d_old, d_new)
            p2 = coarse_index_with_item(p, p_in, P, d_old, d_new)
            for k in range(p, P + 1):
                pair = l2[cell.idx_skip_gate_plus(p, k)] + l2[cell.idx_skip_gate_minus(p, k)]
                if k == p1:
                    result.ok(pair == 0.0, f"skip gate nonzero at k == p1 == {k}")
                else:
                    result.ok(pair >= 2.0, f"skip gate below 2 at ({p},{k})")
                c["skip_gates"] += 1
            for k in range(1, p + 1):
                pair = l2[cell.idx_take_gate_plus(p, k)] + l2[cell.idx_take_gate_minus(p, k)]
                if k == p2:
                    result.ok(pair == 0.0, f"take gate nonzero at k == p2 == {k}")
                else:
                    result.ok(pair >= 2.0, f"take gate below 2 at ({p},{k})")
                c["take_gates"] += 1
            result.ok(p2 <= p, f"take re-index {p2} above row {p}")
            h1, h2 = cell.selected_values(layers, p)
            want_h1 = g_in[p1 - 1] if p1 <= P else 2.0
            want_h2 = g_in[p2 - 1] if p2 >= 1 else 0.0
            result.ok(h1 == want_h1, f"h1({p}) = {h1}, want {want_h1}")
            result.ok(h2 == want_h2, f"h2({p}) = {h2}, want {want_h2}")
            c["selected"] += 2
            want_out = min(h1, s_in + h2)
            result.ok(layers[-1][p - 1] == want_out, f"output ({p}) off")
            c["minimum"] += 1
        result.ok(layers[-1][P] == total_in + p_in, "profit total output off")


def _perturbed(net: ReluNetwork, arc_index: int, delta: float) -> ReluNetwork:
    """Copy of `net` with one arc weight shifted (harness self-test only)."""
    w = net._w.copy()
    w[arc_index] += delta
    return ReluNetwork._from_arrays(
        net.layer_sizes, net._sl.copy(), net._si.copy(), net._tl.copy(),
        net._ti.copy(), w, [b.copy() for b in net.biases_by_layer],
    )


# -- suites --------------------------------------------------------------------


def suite_relu(trials: int, seed: int) -> SuiteResult:
    r = SuiteResult("relu_core")
    rng = SplitMix64(seed)
    for t in range(trials):
        n = rng.randint(1, 9)
        net = min_n_gadget(n)
        xs = grid_values(rng, n, -(2**27), 2**27)
        r.ok(net.evaluate(xs)[0] == float(np.min(xs)), "tree minimum != scan minimum")
        want_depth = 1 if n == 1 else int(np.ceil(np.log2(n))) + 1
        r.ok(net.size == n - 1 and net.depth == want_depth, "minimum gadget shape off")
        # unfolded running minimum over a non-negative stream
        steps = rng.randint(2, 5)
        stream = grid_values(rng, steps + 1, 0, 2**27)
        unfolded = unfold(min2_gadget(), steps, {0: 0})
        r.ok(unfolded.evaluate(stream)[0] == float(np.min(stream)), "unfold mismatch")
        doc = net.to_json_dict()
        r.ok(ReluNetwork.from_json_dict(doc) == net, "serialization round trip broke")
    return r


def suite_dp(trials: int, seed: int, inject_fault: bool = False) -> SuiteResult:
    r = SuiteResult("dp_nn")
    rng = SplitMix64(seed)
    cell = dp_nn.build_dp_cell(8)
    if inject_fault:
        cell = dp_nn.DpCell(_perturbed(cell.net, 0, 0.5), cell.p_star)
    probe_dp_cell(cell, rng, max(4, trials), r)
    for t in range(trials):
        p_star = rng.randint(2, 24)
        inst = capped_instance(seed * 1_000_003 + t, p_star, 11)
        table = dp_table(inst, p_star)
        trace = dp_nn.run_recurrent(dp_nn.build_dp_cell(p_star), inst)
        r.ok(
            all(
                np.array_equal(col, table.values[1:, i])
                for i, col in enumerate(trace.states)
            ),
            "network states differ from the table",
        )
        sol = dp_nn.solve_exact(inst)
        best = brute_force(inst)
        r.ok(sol.value == best.value, f"value {sol.value} != brute force {best.value}")
        r.ok(sum(inst.sizes[i] for i in sol.items) <= 1.0 + 1e-9, "witness overweight")
        r.ok(sum(inst.profits[i] for i in sol.items) >= sol.value, "witness under target")
    return r


def suite_fptas(trials: int, seed: int) -> SuiteResult:
    r = SuiteResult("fptas_nn")
    rng = SplitMix64(seed)
    probe_fptas_cell(fptas_nn.build_fptas_cell(6), rng, max(4, trials), r)
    for t in range(trials):
        p_star = rng.randint(4, 40)
        inst = capped_instance(seed * 2_000_003 + t, p_star, 9)
        P = rng.randint(2, 20)
        table = fptas_nn.run_fptas(fptas_nn.build_fptas_cell(P), inst).table
        ref = fptas_reference(inst, P)
        r.ok(np.array_equal(table.values, ref.values), "states differ from reference")
        r.ok(table.p_star_sums == ref.p_star_sums, "profit totals differ")
        best = brute_force(inst)
        sol = fptas_nn.solve_approx(inst, "0.5")
        r.ok(sol.value <= best.value, "guaranteed value above the optimum")
        r.ok(sol.value >= 0.5 * best.value - 1e-9, "approximation bound violated")
        in_profit = sum(inst.profits[i] for i in sol.items)
        in_size = sum(inst.sizes[i] for i in sol.items)
        r.ok(in_profit >= sol.value - 1e-9 and in_size <= 1.0 + 1e-9, "witness invalid")
    return r


def suite_co(trials: int, seed: int) -> SuiteResult:
    r = SuiteResult("co_builders")
    rng = SplitMix64(seed)
    for t in range(trials):
        pair = instance_gen.gen_sequences(
            rng.randint(1, 10), rng.randint(1, 10), rng.randint(1, 5), seed * 31 + t
        )
        r.ok(co_builders.run_lcs(pair) == co_builders.lcs_length(pair.x, pair.y),
             "subsequence length mismatch")

        g = instance_gen.gen_graph(rng.randint(2, 7), 10.0, seed * 37 + t)
        r.ok(
            np.array_equal(co_builders.run_bellman_ford(g), co_builders.bellman_ford_distances(g)),
            "relaxation distances mismatch",
        )
        r.ok(
            np.array_equal(co_builders.run_apsp(g), co_builders.floyd_warshall(g.lengths)),
            "all-pairs distances mismatch",
        )

        gc = instance_gen.gen_graph(rng.randint(2, 5), 3, seed * 41 + t,
                                    with_resources=True, integer_lengths=True)
        limit = rng.randint(0, 6) * 0.5 * float(np.max(gc.resources))
        got = co_builders.run_csp(gc, 15, limit)
        want = {v: (d if d is not None and d <= 15 else None)
                for v, d in co_builders.enumerate_csp_lengths(gc, limit).items()}
        r.ok(got == want, f"constrained lengths {got} != {want}")

        nt = rng.randint(3, 7)
        dist = instance_gen.gen_graph(nt, 10.0, seed * 43 + t).lengths
        r.ok(co_builders.run_tsp(dist) == co_builders.tsp_brute_force(dist),
             "tour length mismatch")
    return r


def suite_gen(trials: int, seed: int) -> SuiteResult:
    r = SuiteResult("instance_gen")
    rng = SplitMix64(seed)
    for t in range(trials):
        p_star = rng.randint(1, 60)
        cfg = GenConfig(seed * 53 + t, p_star)
        a = instance_gen.gen_knapsack(cfg)
        b = instance_gen.gen_knapsack(cfg)
        r.ok(a == b, "same seed produced different instances")
        r.ok(sum(a.profits) == p_star, "profit sum != p_star")
        if a.n == 1:
            r.ok(0.0 < a.sizes[0] <= 1.0, "single size out of range")
        else:
            r.ok(1.0 < sum(a.sizes) < 2.0, "size sum outside ]1, 2[")
        r.ok(all(0.0 < s <= 1.0 for s in a.sizes), "item size out of range")
        r.ok(all(round(s / GRID_QUANTUM) * GRID_QUANTUM == s for s in a.sizes),
             "size off the grid")
    return r


_SUITES = {
    "relu": suite_relu,
    "dp": suite_dp,
    "fptas": suite_fptas,
    "co": suite_co,
    "gen": suite_gen,
}


def suite_names():
    return list(_SUITES)


def run_suite(name: str, trials: int, seed: int, inject_fault: bool = False) -> SuiteResult:
    if name == "dp":
        return suite_dp(trials, seed, inject_fault=inject_fault)
    return _SUITES[name](trials, seed)
