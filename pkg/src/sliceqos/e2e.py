"""End-to-end QoS composition.

Combines the cyclic-scheme reliabilities, per-link frame reliabilities and
min-plus delay bounds along each flow's path into a verdict per flow, and
produces the reliability/latency sweep tables.

Path model: a cyclic hop contributes one full cycle time of access delay
and (for sporadic traffic) shapes the bytes entering the switched network;
each switched hop is a pure-rate server with two strict-priority queues.
Low-priority queues see the leftover service after high-priority traffic;
a flow's departure bound feeds the next hop as its arrival curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import cyclic
from .curves import (
    RateLatency,
    TokenBucket,
    UnstableSystemError,
    delay_bound,
    leftover_service,
)
from .cyclic import Deterministic, Poisson, alarm_egress_bound
from .scenario import FlowSpec, Hop, Scenario


@dataclass(frozen=True)
class HopResult:
    link: str
    kind: str
    delay_ms: float
    arrival_in: TokenBucket | None
    arrival_out: TokenBucket | None


@dataclass(frozen=True)
class PathResult:
    flow: str
    delay_bound_ms: float
    delivery_reliability: float
    per_hop: tuple[HopResult, ...]
    latency_req_ms: float
    reliability_req: float
    latency_ok: bool
    reliability_ok: bool


def path_reliability(scheme_success: float, links: list[float]) -> float:
    """Compose resource-shortage success with independent per-link delivery."""
    if not 0.0 <= scheme_success <= 1.0:
        raise ValueError("scheme success must be a probability")
    result = scheme_success
    for rel in links:
        if not 0.0 <= rel <= 1.0:
            raise ValueError("link reliabilities must be in [0, 1]")
        result *= rel
    return result


class E2EAnalysis:
    """Network-wide worst-case analysis of one scenario.

    Routes are computed once; `delays` and `results` re-evaluate cheaply for
    different alarm bounds, which is what the sweep tables need.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.routes: dict[str, list[Hop]] = {
            f.name: scenario.route(f) for f in scenario.flows
        }
        self.flows: dict[str, FlowSpec] = {f.name: f for f in scenario.flows}
        self.overwriters: dict[str, list[str]] = {}
        for f in scenario.flows:
            if f.scheme == "overwrite":
                self.overwriters.setdefault(f.target, []).append(f.name)

    # -- arrival curves ------------------------------------------------------

    def _entry_arrival(self, flow: FlowSpec, r_alarms: float | None) -> TokenBucket:
        """Arrival bound of a flow at its first switched hop."""
        cycle = self.scenario.cycle_time_ms
        rate = flow.size_bytes / flow.period_ms
        hops = self.routes[flow.name]
        first_switched = next(i for i, h in enumerate(hops) if h.link.kind == "switched")
        crosses_cyclic_first = any(
            h.link.kind == "cyclic" for h in hops[:first_switched]
        )
        if not crosses_cyclic_first:
            return TokenBucket(rate, flow.size_bytes)
        if flow.scheme == "overwrite":
            frames = (
                r_alarms
                if r_alarms is not None
                else self.flows[flow.target].frames_per_cycle
            )
            return alarm_egress_bound(frames, flow.size_bytes, cycle)
        # Periodic traffic crossing the cyclic hop keeps its own bound but
        # may be delayed by up to one cycle, which inflates the burst.
        return TokenBucket(rate, flow.size_bytes + rate * cycle)

    # -- delay propagation ---------------------------------------------------

    def delays(self, r_alarms: float | None = None):
        """Per-flow delay bounds and per-hop details.

        Returns (flow -> total delay in ms, flow -> list of HopResult).
        Unstable hops yield infinite delays rather than raising; `path_delay`
        turns those into errors.
        """
        scn = self.scenario
        switched: dict[str, list[tuple[int, tuple]]] = {}
        hopkeys: dict[tuple, list[tuple[str, int]]] = {}
        for name, hops in self.routes.items():
            lst = []
            for i, h in enumerate(hops):
                if h.link.kind != "switched":
                    continue
                key = (h.link.name, h.src, h.dst)
                lst.append((i, key))
                hopkeys.setdefault(key, []).append((name, len(lst) - 1))
            switched[name] = lst
        arrivals: dict[tuple[str, int], TokenBucket] = {}
        for name, flow in self.flows.items():
            if switched[name]:
                arrivals[(name, 0)] = self._entry_arrival(flow, r_alarms)
        hop_delay: dict[tuple, dict[str, float]] = {}
        pending = set(hopkeys)
        while pending:
            progressed = False
            for key in sorted(pending):
                members = hopkeys[key]
                if any((n, i) not in arrivals for n, i in members):
                    continue
                link = scn.links[key[0]]
                service = RateLatency(link.rate_bytes_per_ms, 0.0)
                agg = {"high": TokenBucket(0.0, 0.0), "low": TokenBucket(0.0, 0.0)}
                present = {"high": False, "low": False}
                for n, i in members:
                    cls = self.flows[n].priority
                    agg[cls] = agg[cls] + arrivals[(n, i)]
                    present[cls] = True
                delays = {"high": 0.0, "low": 0.0}
                if present["high"]:
                    delays["high"] = self._safe_delay(agg["high"], service)
                if present["low"]:
                    delays["low"] = self._safe_low_delay(agg["low"], agg["high"], service)
                hop_delay[key] = delays
                for n, i in members:
                    d = delays[self.flows[n].priority]
                    a = arrivals[(n, i)]
                    if math.isinf(d):
                        out = TokenBucket(a.rate, math.inf if a.rate > 0 else a.burst)
                    else:
                        out = TokenBucket(a.rate, a.burst + a.rate * d)
                    if i + 1 < len(switched[n]):
                        arrivals[(n, i + 1)] = out
                pending.discard(key)
                progressed = True
            if not progressed:
                raise RuntimeError("cyclic dependency between switched hops")
        totals: dict[str, float] = {}
        details: dict[str, list[HopResult]] = {}
        for name, hops in self.routes.items():
            flow = self.flows[name]
            total = 0.0
            per_hop: list[HopResult] = []
            sw_idx = 0
            for h in hops:
                if h.link.kind == "cyclic":
                    total += scn.cycle_time_ms
                    per_hop.append(
                        HopResult(h.link.name, "cyclic", scn.cycle_time_ms, None, None)
                    )
                else:
                    key = (h.link.name, h.src, h.dst)
                    d = hop_delay[key][flow.priority]
                    a_in = arrivals[(name, sw_idx)]
                    if math.isinf(d):
                        a_out = TokenBucket(a_in.rate, math.inf if a_in.rate > 0 else a_in.burst)
                    else:
                        a_out = TokenBucket(a_in.rate, a_in.burst + a_in.rate * d)
                    per_hop.append(HopResult(h.link.name, "switched", d, a_in, a_out))
                    total += d
                    sw_idx += 1
            totals[name] = total
            details[name] = per_hop
        return totals, details

    @staticmethod
    def _safe_delay(arrival: TokenBucket, service: RateLatency) -> float:
        try:
            return delay_bound(arrival, service)
        except UnstableSystemError:
            return math.inf

    @staticmethod
    def _safe_low_delay(
        arrival: TokenBucket, hp: TokenBucket, service: RateLatency
    ) -> float:
        if hp.rate >= service.rate or math.isinf(hp.burst):
            return math.inf
        return E2EAnalysis._safe_delay(arrival, leftover_service(service, hp))

    # -- reliability ---------------------------------------------------------

    def scheme_success(
        self,
        flow: FlowSpec,
        lam: float | None = None,
        control_frames: int | None = None,
    ) -> float:
        """Probability the cyclic slice scheme delivers the flow's frames."""
        scn = self.scenario
        if flow.scheme == "deterministic":
            writers = self.overwriters.get(flow.name, [])
            if not writers:
                return 1.0
            frames = control_frames if control_frames is not None else flow.frames_per_cycle
            det = Deterministic(frames, flow.size_bytes / frames)
            models = [scn.arrival_model(self.flows[w], lam) for w in writers]
            return cyclic.overwrite_deterministic_reliability(det, models)
        if flow.scheme == "overwrite":
            target = self.flows[flow.target]
            frames = (
                control_frames if control_frames is not None else target.frames_per_cycle
            )
            peers = self.overwriters[flow.target]
            models = [scn.arrival_model(self.flows[p], lam) for p in peers]
            return cyclic.overwrite_stochastic_reliability(frames, models)
        if flow.scheme == "fixed":
            model = scn.arrival_model(flow, lam if flow.traffic == "poisson" else None)
            return cyclic.fixed_reliability(model, flow.allocation_bytes)
        if flow.scheme == "shared":
            members = [
                f
                for f in scn.flows
                if f.scheme == "shared" and f.group == flow.group and f.unit == flow.unit
            ]
            models = [scn.arrival_model(m, lam if m.traffic == "poisson" else None) for m in members]
            return cyclic.shared_pool_reliability(models, flow.pool_bytes)
        return 1.0

    def reliability(
        self,
        flow: FlowSpec,
        lam: float | None = None,
        control_frames: int | None = None,
    ) -> float:
        links = [h.link.frame_reliability for h in self.routes[flow.name]]
        return path_reliability(self.scheme_success(flow, lam, control_frames), links)

    # -- combined results ----------------------------------------------------

    def results(
        self,
        r_alarms: float | None = None,
        lam: float | None = None,
        control_frames: int | None = None,
    ) -> list[PathResult]:
        totals, details = self.delays(r_alarms)
        out = []
        for name in sorted(self.flows):
            flow = self.flows[name]
            delay = totals[name]
            rel = self.reliability(flow, lam, control_frames)
            out.append(
                PathResult(
                    flow=name,
                    delay_bound_ms=delay,
                    delivery_reliability=rel,
                    per_hop=tuple(details[name]),
                    latency_req_ms=flow.latency_req_ms,
                    reliability_req=flow.reliability_req,
                    latency_ok=delay <= flow.latency_req_ms,
                    reliability_ok=rel >= flow.reliability_req,
                )
            )
        return out


def analyze_scenario(
    scenario: Scenario,
    r_alarms: float | None = None,
    lam: float | None = None,
    control_frames: int | None = None,
) -> list[PathResult]:
    """PathResult per flow, sorted by flow name."""
    return E2EAnalysis(scenario).results(r_alarms, lam, control_frames)


def path_delay(scenario: Scenario, flow_name: str, r_alarms: float | None = None) -> PathResult:
    """End-to-end analysis of one flow; raises on an unstable hop."""
    analysis = E2EAnalysis(scenario)
    if flow_name not in analysis.flows:
        raise KeyError(f"unknown flow {flow_name!r}")
    totals, details = analysis.delays(r_alarms)
    if math.isinf(totals[flow_name]):
        hop = next(h.link for h in details[flow_name] if math.isinf(h.delay_ms))
        raise UnstableSystemError(
            f"flow {flow_name!r} has no finite delay bound at hop {hop!r}"
        )
    flow = analysis.flows[flow_name]
    rel = analysis.reliability(flow)
    return PathResult(
        flow=flow_name,
        delay_bound_ms=totals[flow_name],
        delivery_reliability=rel,
        per_hop=tuple(details[flow_name]),
        latency_req_ms=flow.latency_req_ms,
        reliability_req=flow.reliability_req,
        latency_ok=totals[flow_name] <= flow.latency_req_ms,
        reliability_ok=rel >= flow.reliability_req,
    )


# ---------------------------------------------------------------------------
# Sweep tables (figure reproduction data).
# ---------------------------------------------------------------------------


def _overwrite_pair(scenario: Scenario) -> tuple[FlowSpec, FlowSpec]:
    """First overwrite flow (by name) and its deterministic target."""
    flows = {f.name: f for f in scenario.flows}
    writers = sorted(f.name for f in scenario.flows if f.scheme == "overwrite")
    if not writers:
        raise ScenarioHasNoOverwriteError("scenario defines no overwrite flow")
    alarm = flows[writers[0]]
    return alarm, flows[alarm.target]


class ScenarioHasNoOverwriteError(ValueError):
    pass


def sweep_reliability(
    scenario: Scenario,
    lambdas: list[float],
    control_frames: int | None = None,
) -> list[tuple[float, float, float]]:
    """Rows of (lambda, control failure prob, alarm failure prob)."""
    alarm, control = _overwrite_pair(scenario)
    frames = control_frames if control_frames is not None else control.frames_per_cycle
    control_links = math.prod(
        h.link.frame_reliability for h in scenario.route(control)
    )
    alarm_links = math.prod(h.link.frame_reliability for h in scenario.route(alarm))
    det = Deterministic(frames, control.size_bytes / frames)
    rows = []
    for lam in lambdas:
        model = Poisson(lam, alarm.size_bytes)
        survival = cyclic.overwrite_deterministic_reliability(det, [model])
        batch = cyclic.overwrite_stochastic_reliability(frames, [model])
        rows.append((lam, 1.0 - survival * control_links, 1.0 - batch * alarm_links))
    return rows


def sweep_latency(
    scenario: Scenario, r_alarms_grid: list[float]
) -> list[tuple[float, float | None, float | None]]:
    """Rows of (r_alarms, alarm delay bound ms, patient-info delay bound ms).

    ``None`` marks an unbounded (unstable) entry.
    """
    analysis = E2EAnalysis(scenario)
    alarm, _ = _overwrite_pair(scenario)
    low_name = _companion_low_flow(analysis, alarm)
    rows = []
    for r in r_alarms_grid:
        totals, _ = analysis.delays(r_alarms=r)
        a = totals[alarm.name]
        p = totals[low_name]
        rows.append(
            (r, None if math.isinf(a) else a, None if math.isinf(p) else p)
        )
    return rows


def _companion_low_flow(analysis: E2EAnalysis, alarm: FlowSpec) -> str:
    """First low-priority flow sharing a switched hop with the alarm flow."""
    alarm_hops = {
        (h.link.name, h.src, h.dst)
        for h in analysis.routes[alarm.name]
        if h.link.kind == "switched"
    }
    for name in sorted(analysis.flows):
        flow = analysis.flows[name]
        if flow.priority != "low":
            continue
        hops = {
            (h.link.name, h.src, h.dst)
            for h in analysis.routes[name]
            if h.link.kind == "switched"
        }
        if hops & alarm_hops:
            return name
    raise ScenarioHasNoOverwriteError("no low-priority flow shares the alarm path")
