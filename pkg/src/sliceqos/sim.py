"""Stochastic validation of the analytic models.

Two modes:

* ``cyclic-reliability``: vectorized Monte Carlo over cycles; draws frame
  counts, applies the slice schemes exactly as the analytic module defines
  them, optionally injects per-link Bernoulli losses, and reports empirical
  failure rates with confidence intervals next to the analytic values.

* ``queue-latency``: discrete-event simulation of the switched network with
  two strict-priority queues per outgoing link (preemptive-resume at byte
  granularity, store-and-forward, FIFO within a priority). Sources emit the
  worst-case pattern their token-bucket bound admits; every observed delay
  is checked against the analytic bound.

The analytic operating point (failure rates near 1e-9) is far below what
naive Monte Carlo can resolve, so reliability validation runs at scaled-up
arrival rates and scaled-down link reliabilities; the analytic formulas,
validated there, carry the extrapolation to the real operating point.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from . import cyclic as cy
from .cyclic import CycleSpec, Deterministic, Fixed, Overwrite, Pmf, Poisson, SharedPool
from .e2e import E2EAnalysis
from .scenario import Scenario


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    seed: int = 1
    mode: str = "cyclic-reliability"  # or "queue-latency"
    n_cycles: int = 1_000_000
    n_frames: int = 1_000_000
    lam: float | None = None  # scaled mean alarms per cycle
    link_loss: float | None = None  # scaled per-link loss probability
    r_alarms: int | None = None  # override alarm frames admitted per cycle

    def __post_init__(self) -> None:
        if self.n_cycles < 1 or self.n_frames < 1:
            raise ValueError("cycle and frame budgets must be >= 1")
        if self.mode not in ("cyclic-reliability", "queue-latency"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class MetricRow:
    """One empirical estimate next to its analytic counterpart."""

    name: str
    empirical: float
    analytic: float
    stderr: float
    n: int

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.empirical - 1.96 * self.stderr, self.empirical + 1.96 * self.stderr)

    @property
    def sigmas(self) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.empirical == self.analytic else math.inf
        return abs(self.empirical - self.analytic) / self.stderr


@dataclass(frozen=True)
class DelayRow:
    """Observed delays of one flow against its analytic bound."""

    flow: str
    frames: int
    mean_delay_ms: float
    max_delay_ms: float
    bound_ms: float
    violations: int


@dataclass(frozen=True)
class SimReport:
    mode: str
    seed: int
    n: int
    metrics: tuple[MetricRow, ...] = ()
    delays: tuple[DelayRow, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def bound_violations(self) -> int:
        return sum(r.violations for r in self.delays)


_SCALED_NOTE = (
    "validation runs in a scaled regime (inflated arrival rate / link loss); "
    "the analytic formulas extrapolate to the native operating point"
)


# ---------------------------------------------------------------------------
# Cycle-level Monte Carlo.
# ---------------------------------------------------------------------------


def _draw_counts(model, rng: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(model, Deterministic):
        return np.full(n, model.frames, dtype=np.int64)
    if isinstance(model, Poisson):
        return rng.poisson(model.mean, n)
    if isinstance(model, Pmf):
        return rng.choice(len(model.probs), size=n, p=np.array(model.probs))
    raise TypeError(f"unknown arrival model {model!r}")


def _null_stderr(analytic: float, n: int) -> float:
    # Standard error under the analytic hypothesis. All metrics here are
    # means of [0, 1] variables, whose variance is at most p(1 - p), so this
    # is a conservative scale for the agreement test even off the Bernoulli
    # case — and it stays meaningful when no rare event was observed at all.
    return math.sqrt(max(analytic * (1.0 - analytic), 0.0) / n)


def _mean_row(name: str, samples: np.ndarray, analytic: float) -> MetricRow:
    n = len(samples)
    return MetricRow(name, float(samples.mean()), analytic, _null_stderr(analytic, n), n)


def simulate_cycle_spec(
    spec: CycleSpec, seed: int, n_cycles: int
) -> list[MetricRow]:
    """Monte Carlo validation of every scheme bound in one cycle spec."""
    rng = np.random.default_rng(seed)
    counts = {app.name: _draw_counts(app.model, rng, n_cycles) for app in spec.apps}
    by_name = {app.name: app for app in spec.apps}
    rows: list[MetricRow] = []
    pools: dict[int, list] = {}
    overwrite_targets: dict[str, list] = {}
    for app in spec.apps:
        scheme = app.scheme
        if isinstance(scheme, Fixed):
            bytes_offered = counts[app.name] * app.model.frame_size
            shortage = (bytes_offered > scheme.allocation + 1e-9).astype(float)
            analytic = 1.0 - cy.fixed_reliability(app.model, scheme.allocation)
            rows.append(_mean_row(f"{app.name}.shortage", shortage, analytic))
        elif isinstance(scheme, SharedPool):
            pools.setdefault(id(scheme), []).append(app)
        elif isinstance(scheme, Overwrite):
            overwrite_targets.setdefault(scheme.target, []).append(app)
    for apps in pools.values():
        pool = apps[0].scheme.pool
        total = sum(counts[a.name] * a.model.frame_size for a in apps)
        shortage = (total > pool + 1e-9).astype(float)
        analytic = 1.0 - cy.shared_pool_reliability([a.model for a in apps], pool)
        label = "+".join(a.name for a in apps)
        rows.append(_mean_row(f"{label}.pool_shortage", shortage, analytic))
    for target_name, writers in overwrite_targets.items():
        target = by_name.get(target_name)
        if target is None or not isinstance(target.model, Deterministic):
            raise ValueError(f"overwrite target {target_name!r} is not deterministic")
        r_d = target.model.frames
        agg = sum(counts[w.name] for w in writers)
        overwritten = np.minimum(agg, r_d)
        models = [w.model for w in writers]
        rows.append(
            _mean_row(
                f"{target_name}.overwrite_rate",
                overwritten / r_d,
                1.0 - cy.overwrite_deterministic_reliability(target.model, models),
            )
        )
        rows.append(
            _mean_row(
                f"{target_name}.batch_failure",
                (agg > r_d).astype(float),
                1.0 - cy.overwrite_stochastic_reliability(r_d, models),
            )
        )
        total_arrived = int(agg.sum())
        if total_arrived > 0:
            frac = int(overwritten.sum()) / total_arrived
            analytic = cy.overwrite_delivered_fraction(r_d, models)
            rows.append(
                MetricRow(
                    f"{'+'.join(w.name for w in writers)}.delivered_fraction",
                    frac,
                    analytic,
                    _null_stderr(analytic, total_arrived),
                    total_arrived,
                )
            )
    return rows


def _scaled_cycle_spec(scenario: Scenario, unit: str, lam: float | None) -> CycleSpec:
    spec = scenario.cycle_spec(unit)
    if lam is None:
        return spec
    apps = tuple(
        cy.CycleApp(
            a.name,
            Poisson(lam, a.model.frame_size) if isinstance(a.model, Poisson) else a.model,
            a.scheme,
        )
        for a in spec.apps
    )
    return CycleSpec(spec.cycle_time, spec.total_resources, apps)


def simulate_cycles(config: SimConfig) -> SimReport:
    """Cycle-level Monte Carlo over the first unit of the scenario."""
    scn = config.scenario
    units = scn.unit_instances()
    if not units:
        return SimReport("cyclic-reliability", config.seed, 0, notes=(_SCALED_NOTE,))
    spec = _scaled_cycle_spec(scn, units[0], config.lam)
    rows = simulate_cycle_spec(spec, config.seed, config.n_cycles)
    notes = [_SCALED_NOTE]
    if config.link_loss is not None:
        rows.extend(_link_loss_rows(config, spec))
        notes.append(f"link loss injected at {config.link_loss:g} per hop")
    return SimReport(
        "cyclic-reliability",
        config.seed,
        config.n_cycles,
        metrics=tuple(rows),
        notes=tuple(notes),
    )


def _link_loss_rows(config: SimConfig, spec: CycleSpec) -> list[MetricRow]:
    """End-to-end delivery of the overwrite pair with Bernoulli link losses."""
    scn = config.scenario
    analysis = E2EAnalysis(scn)
    rng = np.random.default_rng(config.seed + 1)
    n = config.n_cycles
    success = 1.0 - config.link_loss
    rows: list[MetricRow] = []
    by_name = {a.name: a for a in spec.apps}
    for app in spec.apps:
        if not isinstance(app.scheme, Overwrite):
            continue
        writer, target = app, by_name[app.scheme.target]
        r_d = target.model.frames
        a = _draw_counts(writer.model, rng, n)
        n_links_w = len(analysis.routes[writer.name])
        n_links_t = len(analysis.routes[target.name])
        # Sporadic frames: min(A, R_d) survive the scheme, then each link.
        delivered = rng.binomial(np.minimum(a, r_d), success**n_links_w)
        arrived = int(a.sum())
        if arrived > 0:
            frac = float(delivered.sum()) / arrived
            analytic = (
                cy.overwrite_delivered_fraction(r_d, [writer.model]) * success**n_links_w
            )
            rows.append(
                MetricRow(
                    f"{writer.name}.e2e_delivery",
                    frac,
                    analytic,
                    _null_stderr(analytic, arrived),
                    arrived,
                )
            )
        # Deterministic frames: those not overwritten survive, then each link.
        kept = r_d - np.minimum(a, r_d)
        det_delivered = rng.binomial(kept, success**n_links_t)
        total = r_d * n
        frac = float(det_delivered.sum()) / total
        analytic = (
            cy.overwrite_deterministic_reliability(target.model, [writer.model])
            * success**n_links_t
        )
        rows.append(
            MetricRow(
                f"{target.name}.e2e_delivery",
                frac,
                analytic,
                _null_stderr(analytic, total),
                total,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Discrete-event queue simulation.
# ---------------------------------------------------------------------------

_TXDONE, _EMIT, _ENTER = 0, 1, 2  # completions before same-instant arrivals


class _Frame:
    __slots__ = ("flow", "size", "created_ns", "hop", "remaining_ns")

    def __init__(self, flow: int, size: float, created_ns: int):
        self.flow = flow
        self.size = size
        self.created_ns = created_ns
        self.hop = 0
        self.remaining_ns: int | None = None


class _Port:
    """Outgoing side of one directed switched link: two priority queues."""

    __slots__ = ("rate_bps", "high", "low", "busy", "busy_high", "end_ns", "epoch")

    def __init__(self, rate_bps: int):
        self.rate_bps = rate_bps
        self.high: list[_Frame] = []
        self.low: list[_Frame] = []
        self.busy: _Frame | None = None
        self.busy_high = False
        self.end_ns = 0
        self.epoch = 0

    def duration_ns(self, frame: _Frame) -> int:
        bits = int(frame.size * 8)
        return -(-bits * 1_000_000_000 // self.rate_bps)  # ceil division


@dataclass
class _FlowPlan:
    index: int
    name: str
    priority_high: bool
    ports: list[tuple]  # directed switched hop keys, in path order
    entry_cyclic: bool
    exit_cyclic: bool
    burst_frames: int  # frames emitted per emission instant
    interval_ns: int
    size: float
    bound_ns: float = math.inf
    count: int = 0
    sum_delay_ns: int = 0
    max_delay_ns: int = 0
    violations: int = 0


def _next_cycle_boundary(t_ns: int, cycle_ns: int) -> int:
    return (t_ns // cycle_ns + 1) * cycle_ns


def simulate_queues(config: SimConfig) -> SimReport:
    """Worst-case-pattern event simulation; checks every delay against its bound."""
    scn = config.scenario
    analysis = E2EAnalysis(scn)
    bounds, _ = analysis.delays(r_alarms=config.r_alarms)
    cycle_ns = round(scn.cycle_time_ms * 1_000_000)

    plans: list[_FlowPlan] = []
    ports: dict[tuple, _Port] = {}
    total_rate = 0.0  # frames per ns
    for name in sorted(analysis.flows):
        flow = analysis.flows[name]
        hops = analysis.routes[name]
        keys = []
        for h in hops:
            if h.link.kind != "switched":
                continue
            key = (h.link.name, h.src, h.dst)
            keys.append(key)
            if key not in ports:
                ports[key] = _Port(int(h.link.rate_bps))
        first_kind = hops[0].link.kind
        last_kind = hops[-1].link.kind
        if flow.scheme == "overwrite":
            burst = (
                config.r_alarms
                if config.r_alarms is not None
                else analysis.flows[flow.target].frames_per_cycle
            )
            interval = cycle_ns
            size = flow.size_bytes
        else:
            burst = 1
            interval = round(flow.period_ms * 1_000_000)
            size = flow.size_bytes
        plan = _FlowPlan(
            index=len(plans),
            name=name,
            priority_high=flow.priority == "high",
            ports=keys,
            entry_cyclic=first_kind == "cyclic",
            exit_cyclic=last_kind == "cyclic" and bool(keys),
            burst_frames=burst,
            interval_ns=interval,
            size=size,
            bound_ns=bounds[name] * 1e6,
        )
        plans.append(plan)
        total_rate += burst / interval
    if not plans:
        return SimReport("queue-latency", config.seed, 0)

    duration_ns = math.ceil(config.n_frames / total_rate)
    heap: list = []
    seq = 0
    for plan in plans:
        heapq.heappush(heap, (0, _EMIT, seq, plan.index))
        seq += 1

    def record(plan: _FlowPlan, frame: _Frame, delivered_ns: int) -> None:
        delay = delivered_ns - frame.created_ns
        plan.count += 1
        plan.sum_delay_ns += delay
        plan.max_delay_ns = max(plan.max_delay_ns, delay)
        if delay > plan.bound_ns + 1.0:  # 1 ns slack for rounding
            plan.violations += 1

    def start_next(key: tuple, now: int) -> None:
        nonlocal seq
        port = ports[key]
        if port.busy is not None:
            return
        if port.high:
            frame = port.high.pop(0)
            port.busy_high = True
        elif port.low:
            frame = port.low.pop(0)
            port.busy_high = False
        else:
            return
        dur = frame.remaining_ns if frame.remaining_ns is not None else port.duration_ns(frame)
        frame.remaining_ns = None
        port.busy = frame
        port.end_ns = now + dur
        port.epoch += 1
        heapq.heappush(heap, (port.end_ns, _TXDONE, seq, (key, port.epoch)))
        seq += 1

    def enqueue(frame: _Frame, now: int) -> None:
        plan = plans[frame.flow]
        key = plan.ports[frame.hop]
        port = ports[key]
        if plan.priority_high:
            port.high.append(frame)
            if port.busy is not None and not port.busy_high:
                # Preemptive-resume: park the low-priority frame with its
                # remaining transmission time and serve the new arrival.
                preempted = port.busy
                preempted.remaining_ns = port.end_ns - now
                port.low.insert(0, preempted)
                port.busy = None
                port.epoch += 1
        else:
            port.low.append(frame)
        start_next(key, now)

    def deliver(frame: _Frame, now: int) -> None:
        plan = plans[frame.flow]
        if plan.exit_cyclic:
            record(plan, frame, _next_cycle_boundary(now, cycle_ns))
        else:
            record(plan, frame, now)

    while heap:
        now, rank, _, payload = heapq.heappop(heap)
        if rank == _TXDONE:
            key, epoch = payload
            port = ports[key]
            if port.epoch != epoch or port.busy is None:
                continue
            frame = port.busy
            port.busy = None
            frame.hop += 1
            if frame.hop < len(plans[frame.flow].ports):
                enqueue(frame, now)
            else:
                deliver(frame, now)
            start_next(key, now)
        elif rank == _ENTER:
            enqueue(payload, now)
        else:
            plan = plans[payload]
            if now >= duration_ns:
                continue
            for _ in range(plan.burst_frames):
                frame = _Frame(plan.index, plan.size, now)
                if not plan.ports:
                    # Entirely cyclic path: delivered at the next boundary.
                    record(plan, frame, _next_cycle_boundary(now, cycle_ns))
                elif plan.entry_cyclic:
                    # Frames created mid-cycle join the switched network at
                    # the next cycle boundary.
                    heapq.heappush(
                        heap,
                        (_next_cycle_boundary(now, cycle_ns), _ENTER, seq, frame),
                    )
                    seq += 1
                else:
                    enqueue(frame, now)
            heapq.heappush(heap, (now + plan.interval_ns, _EMIT, seq, payload))
            seq += 1

    rows = []
    for plan in plans:
        if plan.count == 0:
            continue
        rows.append(
            DelayRow(
                flow=plan.name,
                frames=plan.count,
                mean_delay_ms=plan.sum_delay_ns / plan.count / 1e6,
                max_delay_ms=plan.max_delay_ns / 1e6,
                bound_ms=bounds[plan.name],
                violations=plan.violations,
            )
        )
    return SimReport(
        "queue-latency",
        config.seed,
        sum(p.count for p in plans),
        delays=tuple(rows),
        notes=("greedy worst-case traffic pattern",),
    )
