"""Min-plus calculus over piecewise-affine curves.

Time is measured in milliseconds and data in bytes throughout. Arrival
curves upper-bound cumulative bytes emitted by a flow; service curves
lower-bound cumulative bytes served by a link. Closed forms are used for
the token-bucket / rate-latency shapes; a grid-based fallback handles
arbitrary piecewise-affine inputs and doubles as the numerical oracle.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

#: Relative tolerance fixed for all floating-point comparison sites.
REL_TOL = 1e-9

#: Default resolution of the grid-based fallback/oracle.
DEFAULT_GRID_POINTS = 10_000


class UnstableSystemError(ValueError):
    """Arrival rate exceeds the guaranteed service rate; no finite bound exists."""


class NoLeftoverServiceError(ValueError):
    """High-priority traffic consumes the entire service rate."""


def _rel_close(a: float, b: float, tol: float = REL_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class PiecewiseAffineCurve:
    """Non-negative, non-decreasing piecewise-affine function of t >= 0.

    ``segments`` is an ordered tuple of ``(start_time, value_at_start, slope)``.
    The first segment starts at t = 0, starts are strictly increasing, and
    boundary values are continuous.
    """

    segments: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("curve needs at least one segment")
        if self.segments[0][0] != 0.0:
            raise ValueError("first segment must start at t = 0")
        prev_start, prev_value, prev_slope = self.segments[0]
        if prev_value < 0.0:
            raise ValueError("curve must be non-negative")
        if prev_slope < 0.0:
            raise ValueError("slopes must be non-negative")
        for start, value, slope in self.segments[1:]:
            if start <= prev_start:
                raise ValueError("segment starts must be strictly increasing")
            if slope < 0.0:
                raise ValueError("slopes must be non-negative")
            end_value = prev_value + prev_slope * (start - prev_start)
            if not _rel_close(end_value, value):
                raise ValueError("segment boundaries must be continuous")
            prev_start, prev_value, prev_slope = start, value, slope

    @property
    def starts(self) -> tuple[float, ...]:
        return tuple(s[0] for s in self.segments)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.starts

    def value(self, t: float) -> float:
        """Evaluate the curve at t >= 0."""
        if t < 0:
            raise ValueError("curve domain is t >= 0")
        idx = bisect.bisect_right(self.starts, t) - 1
        start, value, slope = self.segments[idx]
        return value + slope * (t - start)

    def values(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an array of times t >= 0."""
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < 0):
            raise ValueError("curve domain is t >= 0")
        starts = np.array([s[0] for s in self.segments])
        values = np.array([s[1] for s in self.segments])
        slopes = np.array([s[2] for s in self.segments])
        idx = np.searchsorted(starts, ts, side="right") - 1
        return values[idx] + slopes[idx] * (ts - starts[idx])

    def inverse(self, y: float) -> float:
        """Smallest t with value(t) >= y, or +inf if the curve never reaches y."""
        for i, (start, value, slope) in enumerate(self.segments):
            if i + 1 < len(self.segments):
                end_value = self.segments[i + 1][1]
            else:
                end_value = math.inf if slope > 0 else value
            if y <= value:
                return start
            if y <= end_value:
                if slope == 0:
                    continue
                return start + (y - value) / slope
        return math.inf


def zero_curve() -> PiecewiseAffineCurve:
    """Curve that is identically zero."""
    return PiecewiseAffineCurve(((0.0, 0.0, 0.0),))


@dataclass(frozen=True)
class TokenBucket:
    """Affine arrival bound: value(t) = rate * t + burst for t >= 0."""

    rate: float  # bytes/ms
    burst: float  # bytes

    def __post_init__(self) -> None:
        if self.rate < 0 or self.burst < 0:
            raise ValueError("token bucket rate and burst must be non-negative")

    @property
    def curve(self) -> PiecewiseAffineCurve:
        return PiecewiseAffineCurve(((0.0, self.burst, self.rate),))

    def __add__(self, other: "TokenBucket") -> "TokenBucket":
        # Aggregation of independent flows sums rates and bursts.
        return TokenBucket(self.rate + other.rate, self.burst + other.burst)


@dataclass(frozen=True)
class RateLatency:
    """Rate-latency service bound: value(t) = rate * max(0, t - latency)."""

    rate: float  # bytes/ms
    latency: float  # ms

    def __post_init__(self) -> None:
        if self.rate <= 0:
            raise ValueError("service rate must be positive")
        if self.latency < 0:
            raise ValueError("service latency must be non-negative")

    @property
    def curve(self) -> PiecewiseAffineCurve:
        if self.latency == 0.0:
            return PiecewiseAffineCurve(((0.0, 0.0, self.rate),))
        return PiecewiseAffineCurve(
            ((0.0, 0.0, 0.0), (self.latency, 0.0, self.rate))
        )


CurveLike = PiecewiseAffineCurve | TokenBucket | RateLatency


def as_curve(obj: CurveLike) -> PiecewiseAffineCurve:
    if isinstance(obj, PiecewiseAffineCurve):
        return obj
    return obj.curve


def curve_value(curve: CurveLike, t: float) -> float:
    """Exact evaluation of a curve at time t >= 0."""
    return as_curve(curve).value(t)


def _classify(curve: PiecewiseAffineCurve):
    """Recognize token-bucket and rate-latency shapes.

    Returns ("tb", rate, burst), ("rl", rate, latency) or None.
    """
    segs = curve.segments
    if len(segs) == 1:
        start, value, slope = segs[0]
        return ("tb", slope, value)
    if len(segs) == 2:
        (s0, v0, m0), (s1, v1, m1) = segs
        if v0 == 0.0 and m0 == 0.0 and v1 == 0.0 and m1 > 0.0:
            return ("rl", m1, s1)
    return None


def min_plus_convolution(
    f: CurveLike,
    g: CurveLike,
    *,
    points: int = DEFAULT_GRID_POINTS,
    horizon: float | None = None,
) -> PiecewiseAffineCurve:
    """Min-plus convolution (f (x) g)(t) = inf over 0<=s<=t of f(s) + g(t-s).

    Token-bucket and rate-latency shapes are convolved in closed form;
    anything else falls back to the grid approximation.
    """
    fc, gc = as_curve(f), as_curve(g)
    sf, sg = _classify(fc), _classify(gc)
    if sf is not None and sg is not None:
        if sf[0] == "rl" and sg[0] == "tb":
            sf, sg = sg, sf
        if sf[0] == "tb" and sg[0] == "tb":
            _, r1, b1 = sf
            _, r2, b2 = sg
            return TokenBucket(min(r1, r2), b1 + b2).curve
        if sf[0] == "rl" and sg[0] == "rl":
            _, r1, t1 = sf
            _, r2, t2 = sg
            return RateLatency(min(r1, r2), t1 + t2).curve
        # token bucket through a rate-latency element: constant burst
        # until the latency elapses, then the smaller of the two rates.
        _, r, b = sf
        _, rr, tt = sg
        if tt == 0.0:
            return PiecewiseAffineCurve(((0.0, b, min(r, rr)),))
        return PiecewiseAffineCurve(((0.0, b, 0.0), (tt, b, min(r, rr))))
    return _convolution_grid(fc, gc, points=points, horizon=horizon)


def _default_horizon(*curves: PiecewiseAffineCurve) -> float:
    last = max(c.starts[-1] for c in curves)
    return max(1.0, 2.0 * (last + 1.0))


def _convolution_grid(
    fc: PiecewiseAffineCurve,
    gc: PiecewiseAffineCurve,
    *,
    points: int,
    horizon: float | None,
) -> PiecewiseAffineCurve:
    if horizon is None:
        horizon = _default_horizon(fc, gc)
    ts = np.linspace(0.0, horizon, points)
    fv = fc.values(ts)
    gv = gc.values(ts)
    h = np.empty(points)
    for k in range(points):
        h[k] = np.min(fv[: k + 1] + gv[k::-1])
    return _curve_from_samples(ts, h)


def _curve_from_samples(ts: np.ndarray, vs: np.ndarray) -> PiecewiseAffineCurve:
    """Piecewise-affine interpolant of sampled values, coerced monotone."""
    vs = np.maximum.accumulate(np.maximum(vs, 0.0))
    slopes = np.maximum(np.diff(vs) / np.diff(ts), 0.0)
    # Merge consecutive samples with (numerically) equal slopes, then
    # rebuild boundary values so the curve is exactly continuous.
    segments: list[tuple[float, float, float]] = []
    value = float(vs[0])
    prev_t = 0.0
    prev_slope = float(slopes[0]) if len(slopes) else 0.0
    segments.append((0.0, value, prev_slope))
    for i in range(1, len(slopes)):
        slope = float(slopes[i])
        if _rel_close(prev_slope, slope):
            continue
        t = float(ts[i])
        value = value + prev_slope * (t - prev_t)
        segments.append((t, value, slope))
        prev_t, prev_slope = t, slope
    return PiecewiseAffineCurve(tuple(segments))


def convolution_value_scan(
    f: CurveLike, g: CurveLike, t: float, *, points: int = DEFAULT_GRID_POINTS
) -> float:
    """Brute-force infimum of f(s) + g(t-s) over a grid plus breakpoints."""
    fc, gc = as_curve(f), as_curve(g)
    cands = [np.linspace(0.0, t, points)]
    cands.append(np.array([b for b in fc.starts if b <= t]))
    cands.append(np.array([t - b for b in gc.starts if t - b >= 0.0]))
    s = np.unique(np.concatenate(cands))
    return float(np.min(fc.values(s) + gc.values(t - s)))


def delay_bound(arrival: TokenBucket, service: RateLatency) -> float:
    """Worst-case delay: horizontal deviation between arrival and service.

    For token-bucket arrival through rate-latency service this equals
    latency + burst / rate.
    """
    if arrival.rate > service.rate * (1.0 + REL_TOL):
        raise UnstableSystemError(
            f"arrival rate {arrival.rate} exceeds service rate {service.rate}"
        )
    return service.latency + arrival.burst / service.rate


def backlog_bound(arrival: TokenBucket, service: RateLatency) -> float:
    """Worst-case backlog: vertical deviation between arrival and service."""
    if arrival.rate > service.rate * (1.0 + REL_TOL):
        raise UnstableSystemError(
            f"arrival rate {arrival.rate} exceeds service rate {service.rate}"
        )
    return arrival.burst + arrival.rate * service.latency


def output_bound(arrival: TokenBucket, service: RateLatency) -> TokenBucket:
    """Departure bound, usable as the arrival curve at the next hop.

    The rate is preserved; the burst grows by rate * service latency.
    """
    if arrival.rate > service.rate * (1.0 + REL_TOL):
        raise UnstableSystemError(
            f"arrival rate {arrival.rate} exceeds service rate {service.rate}"
        )
    return TokenBucket(arrival.rate, arrival.burst + arrival.rate * service.latency)


def leftover_service(
    service: RateLatency, high_priority_arrival: TokenBucket
) -> RateLatency:
    """Strict-priority leftover service after higher-priority traffic.

    Non-decreasing closure of max(0, service(t) - hp(t)); for these shapes
    that is a rate-latency element again.
    """
    hp = high_priority_arrival
    if hp.rate >= service.rate:
        raise NoLeftoverServiceError(
            f"high-priority rate {hp.rate} saturates service rate {service.rate}"
        )
    rate = service.rate - hp.rate
    latency = (service.rate * service.latency + hp.burst) / rate
    return RateLatency(rate, latency)


# ---------------------------------------------------------------------------
# Grid-scan oracles.  These stay independent of the closed forms above and
# are used by the test suite and the `check` diagnostics.
# ---------------------------------------------------------------------------


def _scan_times(
    horizon: float, points: int, *curves: PiecewiseAffineCurve
) -> np.ndarray:
    cands = [np.linspace(0.0, horizon, points)]
    for c in curves:
        cands.append(np.array([b for b in c.starts if b <= horizon]))
    return np.unique(np.concatenate(cands))


def horizontal_deviation_scan(
    arrival: CurveLike,
    service: CurveLike,
    *,
    points: int = DEFAULT_GRID_POINTS,
    horizon: float | None = None,
) -> float:
    """Numeric horizontal deviation: sup over t of inverse_service(arrival(t)) - t."""
    ac, sc = as_curve(arrival), as_curve(service)
    if horizon is None:
        horizon = _default_horizon(ac, sc)
    best = 0.0
    for t in _scan_times(horizon, points, ac, sc):
        u = sc.inverse(ac.value(float(t)))
        if math.isinf(u):
            return math.inf
        best = max(best, u - float(t))
    return best


def vertical_deviation_scan(
    arrival: CurveLike,
    service: CurveLike,
    *,
    points: int = DEFAULT_GRID_POINTS,
    horizon: float | None = None,
) -> float:
    """Numeric vertical deviation: sup over t of arrival(t) - service(t)."""
    ac, sc = as_curve(arrival), as_curve(service)
    if horizon is None:
        horizon = _default_horizon(ac, sc)
    ts = _scan_times(horizon, points, ac, sc)
    return float(np.max(ac.values(ts) - sc.values(ts)))


def deconvolution_value_scan(
    arrival: CurveLike,
    service: CurveLike,
    t: float,
    *,
    points: int = DEFAULT_GRID_POINTS,
    u_max: float | None = None,
) -> float:
    """Numeric min-plus deconvolution: sup over u >= 0 of arrival(t+u) - service(u)."""
    ac, sc = as_curve(arrival), as_curve(service)
    if u_max is None:
        u_max = _default_horizon(ac, sc)
    us = _scan_times(u_max, points, ac, sc)
    return float(np.max(ac.values(t + us) - sc.values(us)))


def leftover_scan(
    service: CurveLike, high_priority_arrival: CurveLike, ts: np.ndarray
) -> np.ndarray:
    """Non-decreasing closure of max(0, service - arrival) on a sorted grid."""
    sc, ac = as_curve(service), as_curve(high_priority_arrival)
    raw = np.maximum(0.0, sc.values(ts) - ac.values(ts))
    return np.maximum.accumulate(raw)


def curves_equal_on_grid(
    f: CurveLike,
    g: CurveLike,
    *,
    points: int = DEFAULT_GRID_POINTS,
    horizon: float | None = None,
    tol: float = REL_TOL,
) -> bool:
    """Grid-evaluated equality of two curves within a relative tolerance."""
    fc, gc = as_curve(f), as_curve(g)
    if horizon is None:
        horizon = _default_horizon(fc, gc)
    ts = _scan_times(horizon, points, fc, gc)
    fv, gv = fc.values(ts), gc.values(ts)
    scale = np.maximum(1.0, np.maximum(np.abs(fv), np.abs(gv)))
    return bool(np.all(np.abs(fv - gv) <= tol * scale))
