"""Battery supply statistics: capability distribution, flattening, seeded sampling.

Second-use batteries arrive with scattered power capabilities. We model the
population as Gaussian with mean `mean_power` and spread `std_power` (both in
per-unit, normalized so a typical healthy battery is 1.0). Flattening maps
that continuous distribution onto a string of `count` slots: the distribution
is cut into `count` equal-probability intervals and each slot is assigned the
conditional mean of its interval. A procured batch, sorted ascending, then
lines up slot-for-slot with the flattened expected set, and per-slot
deviations drive the Monte Carlo stages downstream.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import InternalCheckError, ParameterError

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# equal-probability intervals must carry mass 1/count to this accuracy
MASS_TOL = 1e-12


def _phi(z: float) -> float:
    # standard normal pdf; exp(-inf) underflows to exactly 0 for infinite z
    return math.exp(-0.5 * z * z) / _SQRT_2PI


class CapabilityDistribution(abc.ABC):
    """Extension point for non-Gaussian supplies.

    `flatten_distribution` only needs the CDF, the quantile function, and the
    conditional first moment over an interval, so any distribution exposing
    these three can be flattened. Only the Gaussian model ships here.
    """

    @abc.abstractmethod
    def cdf(self, x: float) -> float: ...

    @abc.abstractmethod
    def quantile(self, q: float) -> float: ...

    @abc.abstractmethod
    def interval_mean(self, low: float, high: float) -> float:
        """Conditional mean of the distribution restricted to [low, high]."""


@dataclass(frozen=True)
class GaussianCapability(CapabilityDistribution):
    mean: float
    std: float

    def cdf(self, x: float) -> float:
        if self.std == 0.0:
            return 1.0 if x >= self.mean else 0.0
        return float(ndtr((x - self.mean) / self.std))

    def quantile(self, q: float) -> float:
        if not 0.0 <= q <= 1.0:
            raise ParameterError(f"quantile level {q} outside [0, 1]")
        if self.std == 0.0:
            return self.mean
        return self.mean + self.std * float(ndtri(q))

    def interval_mean(self, low: float, high: float) -> float:
        if not low < high:
            raise ParameterError("interval_mean needs low < high")
        if self.std == 0.0:
            return self.mean
        a = (low - self.mean) / self.std
        b = (high - self.mean) / self.std
        mass = float(ndtr(b) - ndtr(a))
        if mass <= 0.0:
            raise ParameterError("interval carries no probability mass")
        return self.mean + self.std * (_phi(a) - _phi(b)) / mass


@dataclass(frozen=True)
class BatterySupply:
    """Gaussian battery population feeding one series string of `count` units."""

    mean_power: float
    std_power: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.mean_power) and self.mean_power > 0.0):
            raise ParameterError("mean_power must be positive and finite")
        if not (math.isfinite(self.std_power) and self.std_power >= 0.0):
            raise ParameterError("std_power must be non-negative and finite")
        if self.std_power >= self.mean_power:
            # keeps the negative-capability tail negligible
            raise ParameterError("std_power must be below mean_power")
        if int(self.count) != self.count or self.count < 1:
            raise ParameterError("count must be a positive integer")

    def distribution(self) -> GaussianCapability:
        return GaussianCapability(self.mean_power, self.std_power)


def _ascending(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) >= 0.0))


@dataclass(frozen=True)
class ExpectedSet:
    """Flattened per-slot expected capabilities, ascending, one per battery."""

    capabilities: np.ndarray
    supply: BatterySupply

    def __post_init__(self):
        caps = np.array(self.capabilities, dtype=float)
        caps.setflags(write=False)
        object.__setattr__(self, "capabilities", caps)
        if caps.shape != (self.supply.count,):
            raise ParameterError("expected set length must equal supply count")
        if not np.all(caps > 0.0):
            raise ParameterError("expected capabilities must be positive")
        if not _ascending(caps):
            raise ParameterError("expected capabilities must be sorted ascending")

    @property
    def count(self) -> int:
        return self.capabilities.size

    @property
    def total_power(self) -> float:
        """Aggregate intrinsic power of the string; rating budgets normalize to it."""
        return float(self.capabilities.sum())


@dataclass(frozen=True)
class BatterySample:
    """One Monte Carlo draw of a procured batch, sorted onto string slots."""

    capabilities: np.ndarray
    deviations: np.ndarray
    seed: int

    def __post_init__(self):
        caps = np.array(self.capabilities, dtype=float)
        dev = np.array(self.deviations, dtype=float)
        caps.setflags(write=False)
        dev.setflags(write=False)
        object.__setattr__(self, "capabilities", caps)
        object.__setattr__(self, "deviations", dev)
        if caps.shape != dev.shape:
            raise ParameterError("capabilities and deviations must align")
        if not np.all(caps > 0.0):
            raise ParameterError("sampled capabilities must be positive")
        if not _ascending(caps):
            raise ParameterError("sampled capabilities must be sorted ascending")

    @property
    def total_power(self) -> float:
        return float(self.capabilities.sum())


def flatten_distribution(dist: CapabilityDistribution, count: int) -> np.ndarray:
    """Cut `dist` into `count` equal-probability intervals; return their means."""
    if int(count) != count or count < 1:
        raise ParameterError("count must be a positive integer")
    bounds = [dist.quantile(k / count) for k in range(count + 1)]
    means = np.empty(count)
    for k in range(count):
        mass = dist.cdf(bounds[k + 1]) - dist.cdf(bounds[k])
        if abs(mass - 1.0 / count) > MASS_TOL:
            raise InternalCheckError(
                f"interval {k} carries probability {mass!r}, expected {1.0 / count!r}"
            )
        means[k] = dist.interval_mean(bounds[k], bounds[k + 1])
    return means


def flatten(supply: BatterySupply) -> ExpectedSet:
    """Flatten the supply distribution onto the string's slots.

    The flattened set is symmetric about the supply mean, sums to
    count * mean_power exactly, and is strictly increasing for any
    positive spread.
    """
    if supply.std_power == 0.0:
        return ExpectedSet(np.full(supply.count, supply.mean_power), supply)
    means = flatten_distribution(supply.distribution(), supply.count)
    if means[0] <= 0.0:
        raise ParameterError(
            "std_power too large for this count: weakest slot mean is not positive"
        )
    return ExpectedSet(means, supply)


def sample_battery_set(supply: BatterySupply, seed: int) -> BatterySample:
    """Draw one batch of `count` capabilities and sort it onto the string.

    Draws are independent Gaussians from numpy's seeded default generator;
    non-positive draws are rejected and redrawn from the same stream, so a
    given (supply, seed) pair always yields the same batch. Deviations are
    taken slot-by-slot against the flattened expected set.
    """
    rng = np.random.default_rng(seed)
    caps = rng.normal(supply.mean_power, supply.std_power, size=supply.count)
    while True:
        bad = caps <= 0.0
        n_bad = int(bad.sum())
        if n_bad == 0:
            break
        caps[bad] = rng.normal(supply.mean_power, supply.std_power, size=n_bad)
    caps = np.sort(caps)
    expected = flatten(supply)
    return BatterySample(caps, caps - expected.capabilities, int(seed))
