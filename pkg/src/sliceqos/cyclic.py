"""Analytic reliability and utilization of cyclic master/slave slicing schemes.

A factory unit runs a fixed-cycle protocol with a byte budget per cycle.
Three allocation strategies are modeled: a fixed per-application byte
reservation, a byte pool shared between stochastic applications, and an
overwrite scheme where sporadic frames replace reserved frames of a
deterministic application. Excess frames are dropped in the same cycle;
nothing is buffered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

from .curves import TokenBucket

#: Absolute tail mass below which a Poisson distribution is truncated.
TAIL_EPS = 1e-15

#: Tolerance for byte/count comparisons against allocations.
_CMP_EPS = 1e-9


# ---------------------------------------------------------------------------
# Arrival models: per-cycle frame-count distributions with a fixed frame size.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Deterministic:
    """Exactly ``frames`` frames of ``frame_size`` bytes in every cycle."""

    frames: int
    frame_size: float

    def __post_init__(self) -> None:
        if self.frames < 0:
            raise ValueError("frame count must be non-negative")
        if self.frame_size <= 0:
            raise ValueError("frame size must be positive")

    def frame_pmf(self) -> list[float]:
        return [0.0] * self.frames + [1.0]


@dataclass(frozen=True)
class Poisson:
    """Poisson-distributed frame count with the given per-cycle mean."""

    mean: float
    frame_size: float

    def __post_init__(self) -> None:
        if self.mean < 0:
            raise ValueError("Poisson mean must be non-negative")
        if self.frame_size <= 0:
            raise ValueError("frame size must be positive")

    def frame_pmf(self) -> list[float]:
        return poisson_pmf_truncated(self.mean)


@dataclass(frozen=True)
class Pmf:
    """Explicit probability mass over frame counts 0..len(probs)-1."""

    probs: tuple[float, ...]
    frame_size: float

    def __post_init__(self) -> None:
        if not self.probs or any(p < 0 for p in self.probs):
            raise ValueError("pmf must be non-empty with non-negative entries")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError("pmf must sum to 1 within 1e-12")
        if self.frame_size <= 0:
            raise ValueError("frame size must be positive")

    def frame_pmf(self) -> list[float]:
        return list(self.probs)


ArrivalModel = Deterministic | Poisson | Pmf


def _poisson_tail_log_bound(mean: float, n: int) -> float:
    """Chernoff bound on log P(X >= n) for a Poisson(mean) variable, n > mean."""
    return n - mean + n * (math.log(mean) - math.log(n))


def poisson_pmf_truncated(mean: float, tail_eps: float = TAIL_EPS) -> list[float]:
    """Poisson pmf truncated where the remaining tail is provably < tail_eps."""
    if mean < 0:
        raise ValueError("Poisson mean must be non-negative")
    if mean == 0.0:
        return [1.0]
    probs = [math.exp(-mean)]
    n = 0
    log_eps = math.log(tail_eps)
    while n <= mean or _poisson_tail_log_bound(mean, n + 1) >= log_eps:
        n += 1
        probs.append(probs[-1] * mean / n)
        if n > 1_000_000:
            raise ValueError(f"Poisson mean {mean} too large to truncate")
    return probs


def frame_count_pmf(model: ArrivalModel) -> list[float]:
    return model.frame_pmf()


def byte_pmf(model: ArrivalModel) -> dict[float, float]:
    """Distribution of bytes offered per cycle."""
    return {k * model.frame_size: p for k, p in enumerate(model.frame_pmf())}


def convolve_counts(p: list[float], q: list[float]) -> list[float]:
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0.0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def convolve_bytes(d1: dict[float, float], d2: dict[float, float]) -> dict[float, float]:
    out: dict[float, float] = {}
    for x, p in d1.items():
        for y, q in d2.items():
            key = x + y
            out[key] = out.get(key, 0.0) + p * q
    return out


def expected_min_count(pmf: list[float], cap: float) -> float:
    """E[min(X, cap)] for a frame-count pmf."""
    return math.fsum(min(k, cap) * p for k, p in enumerate(pmf))


def _aggregate_count_pmf(models: list[ArrivalModel]) -> list[float]:
    if not models:
        return [1.0]
    return reduce(convolve_counts, (m.frame_pmf() for m in models))


# ---------------------------------------------------------------------------
# Slice schemes.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Fixed:
    """Dedicated byte allocation per cycle for one application."""

    allocation: float

    def __post_init__(self) -> None:
        if self.allocation < 0:
            raise ValueError("allocation must be non-negative")


@dataclass(frozen=True)
class SharedPool:
    """Byte pool multiplexed between a set of stochastic applications."""

    pool: float
    members: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.pool < 0:
            raise ValueError("pool must be non-negative")


@dataclass(frozen=True)
class Overwrite:
    """Sporadic frames overwrite reserved frames of a deterministic app."""

    target: str


SliceScheme = Fixed | SharedPool | Overwrite


@dataclass(frozen=True)
class CycleApp:
    name: str
    model: ArrivalModel
    scheme: SliceScheme | None  # None marks a plain deterministic reservation


@dataclass(frozen=True)
class CycleSpec:
    """One factory unit: cycle time, per-cycle byte budget, bound applications."""

    cycle_time: float  # ms
    total_resources: float  # bytes per cycle
    apps: tuple[CycleApp, ...]

    def __post_init__(self) -> None:
        if self.cycle_time <= 0:
            raise ValueError("cycle time must be positive")
        reserved = 0.0
        pools_seen: set[float] = set()
        for app in self.apps:
            scheme = app.scheme
            if scheme is None:
                if not isinstance(app.model, Deterministic):
                    raise ValueError(
                        f"app {app.name}: plain reservation requires a deterministic model"
                    )
                reserved += app.model.frames * app.model.frame_size
            elif isinstance(scheme, Fixed):
                reserved += scheme.allocation
            elif isinstance(scheme, SharedPool):
                if id(scheme) not in pools_seen:
                    pools_seen.add(id(scheme))
                    reserved += scheme.pool
        if reserved > self.total_resources + _CMP_EPS:
            raise ValueError(
                f"cycle overcommitted: {reserved} bytes reserved, "
                f"{self.total_resources} available"
            )


# ---------------------------------------------------------------------------
# Reliability / utilization operations.
# ---------------------------------------------------------------------------


def fixed_reliability(app: ArrivalModel, allocation: float) -> float:
    """P(all arriving frames fit into the dedicated allocation)."""
    if allocation < 0:
        raise ValueError("allocation must be non-negative")
    pmf = app.frame_pmf()
    total = math.fsum(
        p for k, p in enumerate(pmf) if k * app.frame_size <= allocation + _CMP_EPS
    )
    return min(total, 1.0)


def shared_pool_reliability(apps: list[ArrivalModel], pool: float) -> float:
    """P(aggregate offered bytes of all members fit into the shared pool)."""
    if not apps:
        raise ValueError("shared pool needs at least one application")
    dist = reduce(convolve_bytes, (byte_pmf(a) for a in apps))
    total = math.fsum(p for b, p in dist.items() if b <= pool + _CMP_EPS)
    return min(total, 1.0)


def overwrite_deterministic_reliability(
    det: Deterministic, stochastic: list[ArrivalModel]
) -> float:
    """Per-frame survival probability of the overwritten deterministic app.

    Each sporadic frame overwrites a uniformly chosen reserved frame, no two
    sharing one; with A aggregate sporadic arrivals the expected overwritten
    count is E[min(A, frames)], so one frame survives with probability
    1 - E[min(A, frames)] / frames. Link errors are composed separately.
    """
    if not isinstance(det, Deterministic) or det.frames < 1:
        raise ValueError("overwrite target must be deterministic with >= 1 frame")
    agg = _aggregate_count_pmf(stochastic)
    return 1.0 - expected_min_count(agg, det.frames) / det.frames


def overwrite_stochastic_reliability(
    det_frames: int, stochastic: list[ArrivalModel]
) -> float:
    """P(an arriving batch finds enough overwritable frames): P(A <= det_frames)."""
    if det_frames < 1:
        raise ValueError("need at least one overwritable frame")
    agg = _aggregate_count_pmf(stochastic)
    total = math.fsum(p for k, p in enumerate(agg) if k <= det_frames)
    return min(total, 1.0)


def overwrite_delivered_fraction(
    det_frames: int, stochastic: list[ArrivalModel]
) -> float:
    """Expected fraction of delivered sporadic frames, E[min(A, R)] / E[A].

    When A exceeds the reserved frame count, exactly det_frames sporadic
    frames succeed and the remainder is dropped. Returns 1.0 for E[A] = 0.
    """
    if det_frames < 1:
        raise ValueError("need at least one overwritable frame")
    agg = _aggregate_count_pmf(stochastic)
    mean = math.fsum(k * p for k, p in enumerate(agg))
    if mean == 0.0:
        return 1.0
    return expected_min_count(agg, det_frames) / mean


def utilization(scheme: SliceScheme, apps: list[ArrivalModel]) -> float:
    """Expected transmitted bytes divided by reserved bytes per cycle.

    The overwrite scheme reserves nothing beyond resources that carry
    deterministic traffic every cycle, so its utilization is 1 by definition.
    """
    if isinstance(scheme, Overwrite):
        return 1.0
    if isinstance(scheme, Fixed):
        budget = scheme.allocation
    else:
        budget = scheme.pool
    if budget == 0.0:
        return 1.0
    dist = reduce(convolve_bytes, (byte_pmf(a) for a in apps))
    transmitted = math.fsum(min(b, budget) * p for b, p in dist.items())
    return transmitted / budget


def alarm_egress_bound(
    det_frames: float, frame_size: float, cycle_time: float
) -> TokenBucket:
    """Token-bucket bound on sporadic traffic leaving the cyclic network.

    At most ``det_frames`` frames per cycle can be carried, so the cyclic
    reservation itself acts as the traffic shaper feeding the switched
    network: rate = det_frames * frame_size / cycle_time, burst likewise.
    """
    if det_frames < 0:
        raise ValueError("frame count must be non-negative")
    if cycle_time <= 0:
        raise ValueError("cycle time must be positive")
    volume = det_frames * frame_size
    return TokenBucket(volume / cycle_time, volume)
