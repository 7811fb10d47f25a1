"""Converter architectures for a series battery string.

Three ways to wire power converters around N series batteries:

* full processing (``fpp``): one converter per battery carries that battery's
  entire output, so delivered power is clipped at the converter rating.
* conventional partial processing (``cppp``): a ladder of N-1 identical
  converters between adjacent batteries shuttles mismatch up and down the
  string while the string bus carries the bulk power.
* lite-sparse hierarchical (``lshippp``): a handful of individually rated
  pair converters placed by the design search (layer 1) on top of a cheap
  identical-rating adjacent ladder (layer 2).

Aggregate converter rating is reported normalized by the expected total
string power fixed at design time, so architectures of equal normalized
rating cost the same converter capacity.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ParameterError, StructuralError
from .supply import ExpectedSet


class ArchitectureKind(str, Enum):
    FPP = "fpp"
    CPPP = "cppp"
    LSHIPPP = "lshippp"


@dataclass(frozen=True)
class ConverterEdge:
    """Directed converter between two batteries; flow is signed along from->to."""

    from_battery: int
    to_battery: int
    rating: float

    def __post_init__(self):
        if int(self.from_battery) != self.from_battery or self.from_battery < 0:
            raise ParameterError("from_battery must be a non-negative integer")
        if int(self.to_battery) != self.to_battery or self.to_battery < 0:
            raise ParameterError("to_battery must be a non-negative integer")
        if self.from_battery == self.to_battery:
            raise ParameterError("converter endpoints must differ")
        if not self.rating >= 0.0:
            raise ParameterError("rating must be non-negative")


@dataclass(frozen=True)
class Layer1Design:
    """Sparse pair converters chosen on the expected set.

    `processed_at_design` keeps each edge's optimal processed power from the
    design solve; ratings come from partitioning those values into
    `rating_partitions` identical-converter groups.
    """

    edges: tuple[ConverterEdge, ...]
    rating_partitions: int
    processed_at_design: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "processed_at_design", tuple(float(p) for p in self.processed_at_design))
        if len(self.edges) == 0:
            raise StructuralError("layer 1 needs at least one converter")
        if len(self.processed_at_design) != len(self.edges):
            raise StructuralError("one design processed power per edge required")
        k = self.rating_partitions
        if int(k) != k or not 1 <= k <= len(self.edges):
            raise StructuralError("rating_partitions must lie in 1..number of edges")
        distinct = len(set(edge.rating for edge in self.edges))
        if distinct > k:
            raise StructuralError(f"{distinct} distinct ratings exceed {k} partitions")

    @property
    def total_rating(self) -> float:
        return float(sum(edge.rating for edge in self.edges))


@dataclass(frozen=True)
class Layer2Design:
    """Dense ladder: one identical converter across each adjacent battery pair."""

    rating: float
    count: int

    def __post_init__(self):
        if not self.rating >= 0.0:
            raise StructuralError("layer 2 rating must be non-negative")
        if int(self.count) != self.count or self.count < 1:
            raise StructuralError("layer 2 needs at least one converter")

    @property
    def total_rating(self) -> float:
        return self.rating * self.count


@dataclass(frozen=True)
class Architecture:
    kind: ArchitectureKind
    num_batteries: int
    total_expected_power: float
    layer1: Layer1Design | None = None
    layer2: Layer2Design | None = None
    cppp_rating: float | None = None
    fpp_rating: float | None = None

    def __post_init__(self):
        n = self.num_batteries
        if int(n) != n or n < 1:
            raise ParameterError("num_batteries must be a positive integer")
        if not self.total_expected_power > 0.0:
            raise ParameterError("total_expected_power must be positive")

        if self.kind == ArchitectureKind.FPP:
            self._require(fpp_rating=True)
            if n < 1:
                raise StructuralError("full processing needs at least one battery")
            if not self.fpp_rating >= 0.0:
                raise StructuralError("fpp_rating must be non-negative")
        elif self.kind == ArchitectureKind.CPPP:
            self._require(cppp_rating=True)
            if n < 2:
                raise StructuralError("a converter ladder needs at least two batteries")
            if not self.cppp_rating >= 0.0:
                raise StructuralError("cppp_rating must be non-negative")
        elif self.kind == ArchitectureKind.LSHIPPP:
            self._require(layer1=True, layer2=True)
            if n < 2:
                raise StructuralError("a hierarchical string needs at least two batteries")
            if len(self.layer1.edges) > n - 1:
                raise StructuralError("layer 1 must stay sparse: at most N-1 converters")
            if self.layer2.count != n - 1:
                raise StructuralError("layer 2 must have exactly N-1 converters")
            for edge in self.layer1.edges:
                if edge.from_battery >= n or edge.to_battery >= n:
                    raise StructuralError(f"edge {edge.from_battery}->{edge.to_battery} leaves the string")
        else:  # pragma: no cover
            raise StructuralError(f"unknown architecture kind {self.kind!r}")

    def _require(self, layer1=False, layer2=False, cppp_rating=False, fpp_rating=False):
        wanted = {"layer1": layer1, "layer2": layer2, "cppp_rating": cppp_rating, "fpp_rating": fpp_rating}
        for name, needed in wanted.items():
            present = getattr(self, name) is not None
            if needed and not present:
                raise StructuralError(f"{self.kind.value} architecture requires {name}")
            if present and not needed:
                raise StructuralError(f"{self.kind.value} architecture must not set {name}")


def aggregate_rating(arch: Architecture) -> float:
    """Total installed converter rating over the design-time expected string power."""
    if arch.kind == ArchitectureKind.FPP:
        installed = arch.num_batteries * arch.fpp_rating
    elif arch.kind == ArchitectureKind.CPPP:
        installed = (arch.num_batteries - 1) * arch.cppp_rating
    else:
        installed = arch.layer1.total_rating + arch.layer2.total_rating
    return installed / arch.total_expected_power


def fpp_from_budget(budget: float, expected: ExpectedSet) -> Architecture:
    """Spend a normalized rating budget evenly across N per-battery converters."""
    if not budget >= 0.0:
        raise ParameterError("rating budget must be non-negative")
    n = expected.count
    rating = budget * expected.total_power / n
    return Architecture(
        ArchitectureKind.FPP,
        num_batteries=n,
        total_expected_power=expected.total_power,
        fpp_rating=rating,
    )


def cppp_from_budget(budget: float, expected: ExpectedSet) -> Architecture:
    """Spend a normalized rating budget evenly across the N-1 ladder converters."""
    if not budget >= 0.0:
        raise ParameterError("rating budget must be non-negative")
    n = expected.count
    if n < 2:
        raise ParameterError("a converter ladder needs at least two batteries")
    rating = budget * expected.total_power / (n - 1)
    return Architecture(
        ArchitectureKind.CPPP,
        num_batteries=n,
        total_expected_power=expected.total_power,
        cppp_rating=rating,
    )
