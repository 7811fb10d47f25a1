"""Flow solutions against a brute-force grid oracle and frozen references.

The oracle sweeps every converter flow over a dense grid; for each flow
vector the best feasible string current follows in closed form, so the
maximum over the grid bounds the LP answer to grid resolution.
"""

import numpy as np
import pytest
from oracles import grid_best_output, incidence

from hippp import (
    Architecture,
    ArchitectureKind,
    BatterySupply,
    ConverterEdge,
    Layer1Design,
    Layer2Design,
    ParameterError,
    StructuralError,
    architecture_edges,
    cppp_from_budget,
    flatten,
    fpp_from_budget,
    max_output_power,
    optimal_flow,
)

GRID_TOL = 2e-3

# nine-slot expected set, frozen in test_supply
E9 = np.array([
    0.6590888179834477, 0.8048689397906807, 0.8815626478102996,
    0.9433576495428530, 1.0, 1.0566423504571470, 1.1184373521897004,
    1.1951310602093193, 1.3409111820165523,
])


def cppp_arch(caps_total, n, rating):
    return Architecture(
        ArchitectureKind.CPPP,
        num_batteries=n,
        total_expected_power=caps_total,
        cppp_rating=rating,
    )


def ls_arch(n, total, layer1_edges, layer2_rating, k=None):
    ratings = [r for (_, _, r) in layer1_edges]
    edges = tuple(ConverterEdge(a, b, r) for (a, b, r) in layer1_edges)
    k = k if k is not None else len(set(ratings))
    layer1 = Layer1Design(edges, k, tuple(ratings))
    return Architecture(
        ArchitectureKind.LSHIPPP,
        num_batteries=n,
        total_expected_power=total,
        layer1=layer1,
        layer2=Layer2Design(rating=layer2_rating, count=n - 1),
    )


class TestFrozenExamples:
    def test_homogeneous_string_needs_no_processing(self):
        caps = [1.0, 1.0, 1.0]
        for arch in (
            cppp_arch(3.0, 3, 0.0),
            fpp_from_budget(0.0, flatten(BatterySupply(1.0, 0.0, 3))),
            ls_arch(3, 3.0, [(0, 2, 0.0)], 0.0),
        ):
            sol = optimal_flow(caps, arch)
            assert sol.output_power == pytest.approx(3.0, abs=1e-9)
            assert sol.processed_power == pytest.approx(0.0, abs=1e-9)

    def test_ladder_reference_point(self):
        # {0.8, 1.0, 1.2} with 0.2 converters balances exactly to the mean
        sol = optimal_flow([0.8, 1.0, 1.2], cppp_arch(3.0, 3, 0.2))
        assert sol.string_current == pytest.approx(1.0, abs=1e-9)
        assert sol.output_power == pytest.approx(3.0, abs=1e-9)
        # 0.2 flows toward the weak end on both rungs
        assert sol.converter_flows == pytest.approx([-0.2, -0.2], abs=1e-9)
        assert sol.processed_power == pytest.approx(0.4, abs=1e-9)
        assert sol.battery_powers == pytest.approx([0.8, 1.0, 1.2], abs=1e-9)

    def test_ladder_cascade_dispatch_nine_slots(self):
        # decentralized ladder dispatch at the expected point: the two weak
        # slots bind, the middle rungs saturate, the strong end curtails
        rating = 0.16875
        sol = optimal_flow(E9, cppp_arch(9.0, 9, rating))
        current = (E9[0] + E9[1] + rating) / 2.0
        assert sol.string_current == pytest.approx(current, abs=1e-9)
        f0 = E9[0] - current
        f2 = -rating + E9[2] - current
        f3 = f2 + E9[3] - current
        expect = [f0, -rating, f2, f3, rating, rating, rating, rating]
        assert sol.converter_flows == pytest.approx(expect, abs=1e-9)
        assert sol.processed_power == pytest.approx(
            abs(f0) + rating + abs(f2) + abs(f3) + 4 * rating, abs=1e-9
        )

    def test_fpp_clips_every_battery(self):
        arch = Architecture(ArchitectureKind.FPP, 3, 3.0, fpp_rating=0.9)
        sol = optimal_flow([0.8, 1.0, 1.2], arch)
        assert sol.output_power == pytest.approx(2.6)
        assert sol.processed_power == pytest.approx(2.6)
        assert sol.battery_powers == pytest.approx([0.8, 0.9, 0.9])

    def test_fpp_zero_rating_is_the_bare_string(self):
        arch = Architecture(ArchitectureKind.FPP, 3, 3.0, fpp_rating=0.0)
        sol = optimal_flow([0.8, 1.0, 1.2], arch)
        assert sol.output_power == pytest.approx(2.4)
        assert sol.processed_power == 0.0
        assert sol.converter_flows.size == 0


class TestGridOracle:
    def test_ladder_instances(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            caps = np.sort(rng.uniform(0.4, 1.6, 3))
            rating = float(rng.uniform(0.05, 0.4))
            sol = optimal_flow(caps, cppp_arch(float(caps.sum()), 3, rating))
            oracle = grid_best_output(caps, [(0, 1), (1, 2)], [rating, rating])
            assert sol.output_power == pytest.approx(oracle, abs=GRID_TOL)

    def test_hierarchical_instances(self):
        rng = np.random.default_rng(6)
        for _ in range(6):
            caps = np.sort(rng.uniform(0.4, 1.6, 3))
            r1 = float(rng.uniform(0.02, 0.15))
            r2 = float(rng.uniform(0.0, 0.1))
            arch = ls_arch(3, float(caps.sum()), [(0, 2, r1)], r2)
            sol = optimal_flow(caps, arch)
            pairs = [(0, 2), (0, 1), (1, 2)]
            oracle = grid_best_output(caps, pairs, [r1, r2, r2])
            assert sol.output_power == pytest.approx(oracle, abs=GRID_TOL)

    def test_two_battery_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(8):
            caps = np.sort(rng.uniform(0.3, 1.7, 2))
            rating = float(rng.uniform(0.02, 0.6))
            sol = optimal_flow(caps, cppp_arch(float(caps.sum()), 2, rating))
            oracle = grid_best_output(caps, [(0, 1)], [rating])
            assert sol.output_power == pytest.approx(oracle, abs=GRID_TOL)


class TestSolutionInvariants:
    def check(self, caps, arch):
        sol = optimal_flow(caps, arch)
        edges = architecture_edges(arch)
        pairs = [(e.from_battery, e.to_battery) for e in edges]
        ratings = np.array([e.rating for e in edges])
        residual = sol.battery_powers - sol.string_current - incidence(pairs, len(caps)) @ sol.converter_flows
        assert np.abs(residual).max(initial=0.0) <= 1e-8
        assert np.all(np.abs(sol.converter_flows) <= ratings + 1e-8)
        assert np.all(np.abs(sol.battery_powers) <= np.asarray(caps) + 1e-8)
        assert sol.processed_power <= ratings.sum() + 1e-8
        assert sol.output_power == pytest.approx(len(caps) * sol.string_current, abs=1e-9)
        return sol

    def test_random_ladders(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            caps = np.sort(rng.uniform(0.3, 1.8, n))
            self.check(caps, cppp_arch(float(caps.sum()), n, float(rng.uniform(0.0, 0.5))))

    def test_random_hierarchies(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            n = int(rng.integers(3, 8))
            caps = np.sort(rng.uniform(0.3, 1.8, n))
            a, b = sorted(rng.choice(n, size=2, replace=False))
            arch = ls_arch(
                n, float(caps.sum()), [(int(a), int(b), float(rng.uniform(0.05, 0.6)))],
                float(rng.uniform(0.0, 0.3)),
            )
            self.check(caps, arch)

    def test_mirror_symmetry(self):
        # relabeling the string end-for-end must not change the deliverable power
        rng = np.random.default_rng(10)
        for _ in range(6):
            n = int(rng.integers(3, 7))
            caps = np.sort(rng.uniform(0.4, 1.6, n))
            rating = float(rng.uniform(0.05, 0.4))
            total = float(caps.sum())
            fwd = optimal_flow(caps, cppp_arch(total, n, rating))
            rev = optimal_flow(caps[::-1].copy(), cppp_arch(total, n, rating))
            assert fwd.output_power == pytest.approx(rev.output_power, abs=1e-8)
            # the hierarchical dispatch also keeps the processing level
            a, b = sorted(rng.choice(n, size=2, replace=False))
            arch_f = ls_arch(n, total, [(int(a), int(b), 0.3)], rating)
            arch_r = ls_arch(n, total, [(n - 1 - int(b), n - 1 - int(a), 0.3)], rating)
            fwd = optimal_flow(caps, arch_f)
            rev = optimal_flow(caps[::-1].copy(), arch_r)
            assert fwd.output_power == pytest.approx(rev.output_power, abs=1e-8)
            assert fwd.processed_power == pytest.approx(rev.processed_power, abs=1e-7)

    def test_rating_monotonicity(self):
        caps = np.array([0.6, 0.9, 1.1, 1.4])
        previous = -1.0
        for rating in np.linspace(0.0, 0.6, 13):
            sol = optimal_flow(caps, cppp_arch(4.0, 4, float(rating)))
            assert sol.output_power >= previous - 1e-9
            previous = sol.output_power

    def test_minimal_processing_for_hierarchical_kind(self):
        # one big converter can serve the deficit directly; the dispatch must
        # not also circulate power through the ladder
        caps = np.array([0.5, 1.0, 1.5])
        arch = ls_arch(3, 3.0, [(0, 2, 0.5)], 0.5)
        sol = optimal_flow(caps, arch)
        assert sol.output_power == pytest.approx(3.0, abs=1e-9)
        assert sol.processed_power == pytest.approx(0.5, abs=1e-9)

    def test_capability_count_checked(self):
        with pytest.raises(ParameterError):
            optimal_flow([1.0, 1.0], cppp_arch(3.0, 3, 0.1))

    def test_rejects_nonpositive_capability(self):
        with pytest.raises(ParameterError):
            optimal_flow([1.0, 0.0, 1.0], cppp_arch(3.0, 3, 0.1))


class TestFreeFlowDesignSolve:
    def test_connected_graph_reaches_the_mean(self):
        caps = np.array([0.7, 1.0, 1.3])
        out = max_output_power(caps, [(0, 1), (1, 2)])
        assert out == pytest.approx(3.0, abs=1e-9)

    def test_disconnected_graph_is_bottlenecked(self):
        # components balance internally; the string current is set by the
        # poorest component mean
        caps = np.array([0.6, 0.8, 1.2, 1.4])
        out = max_output_power(caps, [(0, 1), (2, 3)])
        assert out == pytest.approx(4 * 0.7, abs=1e-9)

    def test_no_edges_is_the_bare_string(self):
        caps = np.array([0.6, 0.8, 1.2])
        assert max_output_power(caps, []) == pytest.approx(3 * 0.6, abs=1e-9)


class TestArchitectureEdges:
    def test_ladder_layout(self):
        edges = architecture_edges(cppp_arch(9.0, 9, 0.2))
        assert [(e.from_battery, e.to_battery) for e in edges] == [(j, j + 1) for j in range(8)]
        assert all(e.rating == 0.2 for e in edges)

    def test_hierarchical_layout(self):
        arch = ls_arch(5, 5.0, [(0, 4, 0.3), (1, 3, 0.2)], 0.1)
        edges = architecture_edges(arch)
        assert [(e.from_battery, e.to_battery) for e in edges[:2]] == [(0, 4), (1, 3)]
        assert [(e.from_battery, e.to_battery) for e in edges[2:]] == [(j, j + 1) for j in range(4)]

    def test_fpp_has_no_string_edges(self):
        with pytest.raises(StructuralError):
            architecture_edges(Architecture(ArchitectureKind.FPP, 3, 3.0, fpp_rating=0.1))
