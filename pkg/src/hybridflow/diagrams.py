"""Speed-density laws for pedestrians and cars, and velocity-class partitions.

Both laws factor exactly into v(v_ff; rho) = v_ff * vhat(rho_total), where
vhat is a dimensionless reduction in [0, 1] that depends only on the total
density in a cell. The structured model exploits this: every velocity class
advects with its own free-flow speed scaled by the shared reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .network import EdgeMode

#: densities below this evaluate to free-flow speed directly
RHO_EPS = 1e-12


@dataclass(frozen=True)
class PedestrianParams:
    """Walking law parameters. Densities in people/m^2, speeds in m/s."""

    vff: float = 1.34
    vff_stddev: float = 0.26
    gamma: float = 1.913
    rho_max: float = 5.4


@dataclass(frozen=True)
class CarParams:
    """Driving law parameters. Densities in cars/m (per lane), speeds in m/s."""

    vff: float = 15.0
    big_k: float = 6.83
    n: float = 1.81
    rho_max: float = 0.12


def _check_rho(rho: float, rho_max: float) -> None:
    if rho < 0.0:
        raise ValueError(f"density must be nonnegative, got {rho}")
    if rho > rho_max:
        raise ValueError(f"density {rho} exceeds jam density {rho_max}")


def pedestrian_velocity(rho: float, params: PedestrianParams | None = None) -> float:
    """Walking speed (m/s) at crowd density rho (people/m^2).

    Falls exponentially with the reciprocal density gap to the jam density:
    exactly v_ff when the cell is (numerically) empty, exactly 0 at rho_max.
    """
    p = params or PedestrianParams()
    _check_rho(rho, p.rho_max)
    if rho <= RHO_EPS:
        return p.vff
    return p.vff * (1.0 - math.exp(-p.gamma * (1.0 / rho - 1.0 / p.rho_max)))


def car_velocity(rho: float, params: CarParams | None = None) -> float:
    """Driving speed (m/s) at linear density rho (cars/m)."""
    p = params or CarParams()
    _check_rho(rho, p.rho_max)
    if rho <= RHO_EPS:
        return p.vff
    num = p.rho_max**p.n - rho**p.n
    den = p.rho_max**p.n + p.big_k * rho**p.n
    return p.vff * num / den


def pedestrian_reduction(params: PedestrianParams) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised vhat(rho_total) for the walking law.

    Unlike the scalar API this clamps out-of-range inputs (tiny negative
    round-off, transient overshoot past rho_max) instead of raising, because
    the solver kernel feeds it raw cell totals.
    """
    gamma, rho_max = params.gamma, params.rho_max

    def vhat(rho: np.ndarray) -> np.ndarray:
        rho = np.maximum(rho, 0.0)
        out = np.ones_like(rho)
        moving = rho > RHO_EPS
        with np.errstate(divide="ignore", over="ignore"):
            gap = 1.0 / np.where(moving, rho, 1.0) - 1.0 / rho_max
            out = np.where(moving, 1.0 - np.exp(-gamma * gap), out)
        return np.clip(out, 0.0, 1.0)

    return vhat


def car_reduction(params: CarParams) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised vhat(rho_total) for the driving law (clamping, see above)."""
    big_k, n, rho_max = params.big_k, params.n, params.rho_max
    jam_n = rho_max**n

    def vhat(rho: np.ndarray) -> np.ndarray:
        rho_n = np.power(np.maximum(rho, 0.0), n)
        return np.clip((jam_n - rho_n) / (jam_n + big_k * rho_n), 0.0, 1.0)

    return vhat


@dataclass(frozen=True)
class VelocityClassPartition:
    """Free-flow speed bands with their normal-distribution mass fractions.

    boundaries has count+1 entries; representatives are band midpoints.
    weights are renormalized so they sum to one, which keeps partitioned
    densities summing back to the original total exactly.
    """

    boundaries: tuple[float, ...]
    representatives: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        m = len(self.representatives)
        if m < 1 or len(self.weights) != m or len(self.boundaries) != m + 1:
            raise ValueError("inconsistent partition arrays")
        degenerate = m == 1 and self.boundaries[0] == self.boundaries[1]
        if not degenerate and any(
            b0 >= b1 for b0, b1 in zip(self.boundaries[:-1], self.boundaries[1:])
        ):
            raise ValueError("class boundaries must be strictly increasing")

    @property
    def count(self) -> int:
        return len(self.representatives)

    @property
    def v_max(self) -> float:
        return self.boundaries[-1]


def normal_band_masses(boundaries, mean: float, stddev: float) -> list[float]:
    """Raw (un-normalized) N(mean, stddev) probability mass of each band."""

    def cdf(x: float) -> float:
        return 0.5 * (1.0 + math.erf((x - mean) / (stddev * math.sqrt(2.0))))

    return [cdf(hi) - cdf(lo) for lo, hi in zip(boundaries[:-1], boundaries[1:])]


def build_partition(mean: float, stddev: float, count: int,
                    span_sigmas: float = 3.0) -> VelocityClassPartition:
    """Equal-width speed bands covering mean +/- span_sigmas * stddev.

    With stddev == 0 (tight fleets, e.g. cars by default) the partition
    degenerates to a single class at the mean speed.
    """
    if count < 1:
        raise ValueError("class count must be at least 1")
    if stddev < 0.0:
        raise ValueError("stddev must be nonnegative")
    if mean - span_sigmas * stddev <= 0.0 and stddev > 0.0:
        raise ValueError("speed band extends to nonpositive speeds; narrow the span")

    if stddev == 0.0:
        if count != 1:
            raise ValueError("zero stddev admits only a single class")
        return VelocityClassPartition((mean, mean), (mean,), (1.0,))

    lo = mean - span_sigmas * stddev
    hi = mean + span_sigmas * stddev
    width = (hi - lo) / count
    boundaries = tuple(lo + j * width for j in range(count)) + (hi,)
    reps = tuple(0.5 * (boundaries[j] + boundaries[j + 1]) for j in range(count))
    raw = normal_band_masses(boundaries, mean, stddev)
    total = sum(raw)
    weights = tuple(w / total for w in raw)
    return VelocityClassPartition(boundaries, reps, weights)


def partition_classes(rho0: float, partition: VelocityClassPartition) -> np.ndarray:
    """Split a total density rho0 into per-class densities.

    Linear in rho0, nonnegative, and the result sums back to rho0 (exactly
    for symmetric splits, to round-off otherwise).
    """
    if rho0 < 0.0:
        raise ValueError(f"density must be nonnegative, got {rho0}")
    return rho0 * np.asarray(partition.weights, dtype=float)


def total_density(class_densities: np.ndarray, axis: int = 0) -> np.ndarray:
    """Sum the class dimension away."""
    return np.asarray(class_densities).sum(axis=axis)


@dataclass(frozen=True)
class ModeDynamics:
    """Everything the solver and routing need to move one mode of traffic."""

    mode: EdgeMode
    rho_max: float
    v_mean: float
    partition: VelocityClassPartition
    reduction: Callable[[np.ndarray], np.ndarray]

    @property
    def v_max(self) -> float:
        return self.partition.v_max

    @property
    def class_count(self) -> int:
        return self.partition.count

    def representatives(self) -> np.ndarray:
        return np.asarray(self.partition.representatives, dtype=float)

    def mean_speed(self, rho_total: float) -> float:
        """Speed of the mean free-flow rider at a given total density."""
        return self.v_mean * float(self.reduction(np.asarray([rho_total]))[0])


def pedestrian_dynamics(params: PedestrianParams | None = None, classes: int = 16,
                        span_sigmas: float = 3.0) -> ModeDynamics:
    p = params or PedestrianParams()
    part = build_partition(p.vff, p.vff_stddev, classes, span_sigmas)
    return ModeDynamics(EdgeMode.WALKWAY, p.rho_max, p.vff, part, pedestrian_reduction(p))


def car_dynamics(params: CarParams | None = None, classes: int = 1,
                 vff_stddev: float = 0.0, span_sigmas: float = 3.0) -> ModeDynamics:
    p = params or CarParams()
    part = build_partition(p.vff, vff_stddev, classes, span_sigmas)
    return ModeDynamics(EdgeMode.STREET, p.rho_max, p.vff, part, car_reduction(p))


def constant_speed_dynamics(speed: float, mode: EdgeMode = EdgeMode.WALKWAY,
                            rho_max: float = math.inf) -> ModeDynamics:
    """Dynamics whose speed never depends on density (for scheme tests)."""
    part = VelocityClassPartition((speed, speed), (speed,), (1.0,))
    return ModeDynamics(mode, rho_max, speed, part, lambda rho: np.ones_like(rho))
