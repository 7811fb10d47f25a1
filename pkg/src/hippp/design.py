"""Two-stage converter placement and rating for the hierarchical architecture.

Layer 1 is designed against the flattened expected set: every way to place M
pair converters on the string is enumerated, each placement is scored by the
deliverable power of its design LP, and ties are settled first by less total
processed power, then by lexicographically smallest edge list, so the result
is independent of enumeration order. The optimal processed powers are then
collapsed into K identical-rating groups to cut part count.

Layer 2 is rated by Monte Carlo: with layer 1 frozen, a shared set of seeded
capability draws is replayed against a grid of trial ladder ratings and the
mean utilization of each trial rating forms a curve. Callers pick the ladder
rating off that curve, usually by spending whatever rating budget layer 1
left over.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from math import comb

import numpy as np

from .architecture import Architecture, ArchitectureKind, ConverterEdge, Layer1Design, Layer2Design
from .errors import EnumerationCapError, ParameterError
from .powerflow import layer1_design_lp, max_output_power, optimal_flow
from .supply import BatterySupply, ExpectedSet, flatten, sample_battery_set

log = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 1_000_000

_VALUE_TIE_TOL = 1e-9

_DEFAULT_TRIAL_RATINGS = (0.0, 0.02, 0.04, 0.06, 0.08, 0.10, 0.15, 0.20, 0.30, 0.50)


@dataclass(frozen=True)
class DesignConfig:
    """Knobs for the two-stage design.

    num_layer1: pair converters placed by the search (M).
    num_rating_sets: identical-rating groups layer 1 is collapsed into (K).
    layer2_trial_ratings: ladder ratings evaluated for the layer-2 curve.
    monte_carlo_trials / base_seed: shared draw schedule; trial t uses
    base_seed + t so every trial rating sees identical batches.
    """

    num_layer1: int = 3
    num_rating_sets: int = 2
    layer2_trial_ratings: tuple[float, ...] = _DEFAULT_TRIAL_RATINGS
    monte_carlo_trials: int = 1000
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer2_trial_ratings", tuple(float(r) for r in self.layer2_trial_ratings))
        if int(self.num_layer1) != self.num_layer1 or self.num_layer1 < 1:
            raise ParameterError("num_layer1 must be a positive integer")
        k = self.num_rating_sets
        if int(k) != k or not 1 <= k <= self.num_layer1:
            raise ParameterError("num_rating_sets must lie in 1..num_layer1")
        ratings = self.layer2_trial_ratings
        if len(ratings) == 0:
            raise ParameterError("layer2_trial_ratings must not be empty")
        if any(r < 0.0 for r in ratings):
            raise ParameterError("layer2_trial_ratings must be non-negative")
        if any(b <= a for a, b in zip(ratings, ratings[1:])):
            raise ParameterError("layer2_trial_ratings must be strictly increasing")
        if int(self.monte_carlo_trials) != self.monte_carlo_trials or self.monte_carlo_trials < 1:
            raise ParameterError("monte_carlo_trials must be a positive integer")


@dataclass(frozen=True)
class Layer2Curve:
    """Mean utilization vs trial ladder rating, non-decreasing by construction."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(r), float(u)) for r, u in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ParameterError("curve needs at least one point")
        for rating, util in pts:
            if rating < 0.0 or not -1e-7 <= util <= 1.0 + 1e-7:
                raise ParameterError("curve points must have rating >= 0 and utilization in [0, 1]")
        for (r0, u0), (r1, u1) in zip(pts, pts[1:]):
            if r1 <= r0:
                raise ParameterError("curve ratings must be strictly increasing")
            if u1 < u0 - 1e-7:
                raise ParameterError("utilization curve must be non-decreasing")

    @property
    def ratings(self) -> tuple[float, ...]:
        return tuple(r for r, _ in self.points)

    @property
    def utilizations(self) -> tuple[float, ...]:
        return tuple(u for _, u in self.points)


def interconnection_count(n: int, m: int) -> int:
    """Number of ways to place m pair converters on an n-battery string."""
    return comb(comb(n, 2), m)


def enumerate_interconnections(n: int, m: int, max_sets: int = DEFAULT_ENUMERATION_CAP):
    """Yield every m-subset of unordered battery pairs, lexicographically.

    Pairs are canonically oriented low index -> high index; flows are signed,
    so orientation costs no generality. Refuses combinatorial blowups.
    """
    if int(n) != n or n < 2:
        raise ParameterError("need at least two batteries to place pair converters")
    if int(m) != m or not 1 <= m <= comb(n, 2):
        raise ParameterError("number of converters must lie in 1..C(n,2)")
    total = interconnection_count(n, m)
    if total > max_sets:
        raise EnumerationCapError(
            f"{total} candidate interconnections exceed the cap of {max_sets}; "
            "reduce num_layer1 or raise the cap deliberately"
        )
    pairs = list(itertools.combinations(range(n), 2))
    return itertools.combinations(pairs, m)


def partition_ratings(processed, k: int) -> list[float]:
    """Collapse per-converter processed powers into k identical-rating groups.

    Sorted descending, the top k-1 converters keep their own processed power
    as their rating; everything else is rated at the k-th highest value.
    Ratings come back in the original converter order and never fall below
    the converter's own processed power.
    """
    values = [float(p) for p in processed]
    if len(values) == 0:
        raise ParameterError("no processed powers to partition")
    if any(v < 0.0 for v in values):
        raise ParameterError("processed powers must be non-negative")
    if int(k) != k or not 1 <= k <= len(values):
        raise ParameterError("number of rating groups must lie in 1..number of converters")
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    kth_value = values[order[k - 1]]
    ratings = [0.0] * len(values)
    for rank, idx in enumerate(order):
        ratings[idx] = values[idx] if rank < k - 1 else kth_value
    return ratings


# design results keyed by (expected capabilities, M, K); the search is pure
_layer1_cache: dict[tuple, Layer1Design] = {}


def _coverage_bound(caps: np.ndarray, edge_set) -> float:
    """Cheap upper bound on deliverable power: any battery with no converter
    pins the string current at its own capability."""
    covered = np.zeros(caps.size, dtype=bool)
    for src, dst in edge_set:
        covered[src] = True
        covered[dst] = True
    if covered.all():
        return float(caps.sum())
    return caps.size * float(caps[~covered].min())


def design_layer1(expected: ExpectedSet, cfg: DesignConfig) -> Layer1Design:
    """Exhaustive search for the best M-converter placement on the expected set."""
    n = expected.count
    m = cfg.num_layer1
    if m > n - 1:
        raise ParameterError("layer 1 must stay sparse: num_layer1 at most count - 1")
    caps = expected.capabilities
    key = (caps.tobytes(), n, m, cfg.num_rating_sets)
    cached = _layer1_cache.get(key)
    if cached is not None:
        return cached

    best_output = -np.inf
    contenders: list[tuple[float, tuple]] = []
    scanned = 0
    for edge_set in enumerate_interconnections(n, m):
        scanned += 1
        if _coverage_bound(caps, edge_set) < best_output - _VALUE_TIE_TOL:
            continue  # provably cannot reach the incumbent
        output = max_output_power(caps, edge_set)
        if output > best_output + _VALUE_TIE_TOL:
            best_output = output
            contenders = [(output, edge_set)]
        elif output >= best_output - _VALUE_TIE_TOL:
            best_output = max(best_output, output)
            contenders.append((output, edge_set))

    chosen_edges = None
    chosen_processed = None
    chosen_sum = np.inf
    for output, edge_set in contenders:
        if output < best_output - _VALUE_TIE_TOL:
            continue
        processed, _ = layer1_design_lp(expected, edge_set)
        total = float(processed.sum())
        # contenders arrive in lexicographic order, so strict improvement only
        if total < chosen_sum - _VALUE_TIE_TOL:
            chosen_sum = total
            chosen_edges = edge_set
            chosen_processed = processed

    log.debug(
        "layer-1 search: %d placements scanned, best output %.6f, edges %s",
        scanned, best_output, chosen_edges,
    )
    ratings = partition_ratings(chosen_processed, cfg.num_rating_sets)
    design = Layer1Design(
        edges=tuple(ConverterEdge(src, dst, r) for (src, dst), r in zip(chosen_edges, ratings)),
        rating_partitions=cfg.num_rating_sets,
        processed_at_design=tuple(float(p) for p in chosen_processed),
    )
    _layer1_cache[key] = design
    return design


def layer2_rating_for_budget(layer1: Layer1Design, expected: ExpectedSet, budget: float) -> float:
    """Per-converter ladder rating that spends what layer 1 left of the budget.

    The layer-1 ratings are already bought; the remaining normalized budget
    spreads evenly over the N-1 ladder converters, floored at zero when layer
    1 alone exceeds the budget.
    """
    if not budget >= 0.0:
        raise ParameterError("rating budget must be non-negative")
    n = expected.count
    if n < 2:
        raise ParameterError("a converter ladder needs at least two batteries")
    leftover = budget * expected.total_power - layer1.total_rating
    return max(0.0, leftover / (n - 1))


def lshippp_for_budget(layer1: Layer1Design, expected: ExpectedSet, budget: float) -> Architecture:
    """Assemble the hierarchical architecture for a normalized rating budget."""
    n = expected.count
    rating = layer2_rating_for_budget(layer1, expected, budget)
    return Architecture(
        ArchitectureKind.LSHIPPP,
        num_batteries=n,
        total_expected_power=expected.total_power,
        layer1=layer1,
        layer2=Layer2Design(rating, n - 1),
    )


def design_layer2(
    layer1: Layer1Design,
    supply: BatterySupply,
    cfg: DesignConfig,
    budget: float | None = None,
) -> tuple[Layer2Design, Layer2Curve]:
    """Monte Carlo rating curve for the ladder under a frozen layer 1.

    Every trial rating replays the same seeded batches (common random
    numbers), which also forces the curve to be non-decreasing. The returned
    design spends `budget` when given; otherwise it takes the cheapest trial
    rating whose mean utilization already matches the top of the curve.
    """
    expected = flatten(supply)
    n = expected.count
    samples = [sample_battery_set(supply, cfg.base_seed + t) for t in range(cfg.monte_carlo_trials)]

    points = []
    for rating in cfg.layer2_trial_ratings:
        arch = Architecture(
            ArchitectureKind.LSHIPPP,
            num_batteries=n,
            total_expected_power=expected.total_power,
            layer1=layer1,
            layer2=Layer2Design(rating, n - 1),
        )
        utilizations = [
            optimal_flow(s.capabilities, arch).output_power / s.total_power for s in samples
        ]
        points.append((rating, float(np.mean(utilizations))))
    curve = Layer2Curve(tuple(points))

    if budget is not None:
        rating = layer2_rating_for_budget(layer1, expected, budget)
    else:
        top = max(curve.utilizations)
        rating = next(r for r, u in curve.points if u >= top - 1e-9)
    return Layer2Design(rating, n - 1), curve
