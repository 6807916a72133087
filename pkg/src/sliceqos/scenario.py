"""Scenario model and file ingestion.

Scenario files use a line-oriented section format::

    [network]            # global settings
    [node NAME]          # standalone node (switch, cloud)
    [unit NAME]          # template for identical factory units
    [link NAME]          # cyclic bus inside a unit, or a switched link
    [flow NAME]          # one traffic relation, replicated per unit

``key = value`` lines fill the current section; ``#`` starts a comment.
Unit-scoped links and flows are expanded into one instance per unit,
named ``<template>@<unit><i>``; unit-local nodes are ``<unit><i>.<device>``.
The bundled ``case_study`` scenario is the normative example.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib.resources import files

from .cyclic import (
    ArrivalModel,
    CycleApp,
    CycleSpec,
    Deterministic,
    Fixed,
    Overwrite,
    Pmf,
    Poisson,
    SharedPool,
    SliceScheme,
)

NODE_KINDS = ("device", "master", "switch", "cloud")
LINK_KINDS = ("cyclic", "switched")
TRAFFIC_KINDS = ("periodic", "poisson")
PRIORITIES = ("high", "low")
SCHEME_KINDS = ("deterministic", "fixed", "shared", "overwrite", "none")


class ScenarioError(ValueError):
    """Semantic error in a scenario (bad reference, violated invariant)."""


class ScenarioFormatError(ScenarioError):
    """Syntax error, carrying 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Template-level definitions (what the file literally says).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NodeDef:
    name: str
    kind: str


@dataclass(frozen=True)
class UnitDef:
    name: str
    count: int
    master: str
    devices: tuple[str, ...]


@dataclass(frozen=True)
class LinkDef:
    name: str
    kind: str
    unit: str | None
    src: str | None
    dst: str | None
    rate_bps: float | None
    frame_reliability: float


@dataclass(frozen=True)
class FlowDef:
    name: str
    unit: str | None
    source: str
    dest: str
    traffic: str
    period_ms: float
    size_bytes: float
    priority: str
    latency_req_ms: float
    reliability_req: float
    scheme: str
    allocation_bytes: float | None = None
    pool_bytes: float | None = None
    group: str | None = None
    target: str | None = None
    frames_per_cycle: int = 1


# ---------------------------------------------------------------------------
# Expanded model (what analyses consume).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    name: str
    kind: str
    unit: str | None = None  # unit instance, e.g. "factory3"


@dataclass(frozen=True)
class Link:
    name: str
    kind: str
    endpoints: tuple[str, ...]  # cyclic: (master, device, ...); switched: (a, b)
    rate_bps: float | None
    frame_reliability: float
    unit: str | None = None

    @property
    def rate_bytes_per_ms(self) -> float:
        if self.rate_bps is None:
            raise ScenarioError(f"link {self.name} has no rate")
        return self.rate_bps / 8.0 / 1000.0


@dataclass(frozen=True)
class FlowSpec:
    name: str
    template: str
    unit: str | None
    source: str
    dest: str
    traffic: str
    period_ms: float
    size_bytes: float
    priority: str
    latency_req_ms: float
    reliability_req: float
    scheme: str
    allocation_bytes: float | None
    pool_bytes: float | None
    group: str | None
    target: str | None  # expanded target flow name
    frames_per_cycle: int

    @property
    def frame_size(self) -> float:
        if self.scheme == "deterministic":
            return self.size_bytes / self.frames_per_cycle
        return self.size_bytes


@dataclass(frozen=True)
class Hop:
    link: Link
    src: str
    dst: str


@dataclass(eq=True)
class Scenario:
    """Parsed scenario; equality compares the template-level definitions."""

    name: str
    cycle_time_ms: float
    cycle_capacity_bytes: float
    node_defs: tuple[NodeDef, ...]
    unit_defs: tuple[UnitDef, ...]
    link_defs: tuple[LinkDef, ...]
    flow_defs: tuple[FlowDef, ...]
    nodes: dict[str, Node] = field(compare=False, repr=False, default_factory=dict)
    links: dict[str, Link] = field(compare=False, repr=False, default_factory=dict)
    flows: list[FlowSpec] = field(compare=False, repr=False, default_factory=list)

    def __post_init__(self) -> None:
        self._expand()
        self._validate()

    # -- expansion ---------------------------------------------------------

    def _expand(self) -> None:
        self.nodes = {}
        self.links = {}
        self.flows = []
        for nd in self.node_defs:
            self._add_node(Node(nd.name, nd.kind))
        instances: dict[str, list[str]] = {}
        for ud in self.unit_defs:
            names = [f"{ud.name}{i}" for i in range(1, ud.count + 1)]
            instances[ud.name] = names
            for inst in names:
                self._add_node(Node(f"{inst}.{ud.master}", "master", inst))
                for dev in ud.devices:
                    self._add_node(Node(f"{inst}.{dev}", "device", inst))
        for ld in self.link_defs:
            if ld.unit is None:
                self._add_link(self._expand_link(ld, None, None))
            else:
                ud = self._unit_def(ld.unit, f"link {ld.name}")
                for inst in instances[ud.name]:
                    self._add_link(self._expand_link(ld, ud, inst))
        for fd in self.flow_defs:
            if fd.unit is None:
                self.flows.append(self._expand_flow(fd, None, None))
            else:
                ud = self._unit_def(fd.unit, f"flow {fd.name}")
                for inst in instances[ud.name]:
                    self.flows.append(self._expand_flow(fd, ud, inst))

    def _unit_def(self, name: str, context: str) -> UnitDef:
        for ud in self.unit_defs:
            if ud.name == name:
                return ud
        raise ScenarioError(f"{context}: unknown unit {name!r}")

    def _add_node(self, node: Node) -> None:
        if node.name in self.nodes:
            raise ScenarioError(f"duplicate node {node.name!r}")
        self.nodes[node.name] = node

    def _add_link(self, link: Link) -> None:
        if link.name in self.links:
            raise ScenarioError(f"duplicate link {link.name!r}")
        self.links[link.name] = link

    def _resolve(self, ref: str, unit_def: UnitDef | None, inst: str | None, context: str) -> str:
        if unit_def is not None and inst is not None:
            local = f"{inst}.{ref}"
            if ref == unit_def.master or ref in unit_def.devices:
                return local
        if ref in self.nodes:
            return ref
        raise ScenarioError(f"{context}: unknown node {ref!r}")

    def _expand_link(self, ld: LinkDef, ud: UnitDef | None, inst: str | None) -> Link:
        name = ld.name if inst is None else f"{ld.name}@{inst}"
        ctx = f"link {name}"
        if ld.kind == "cyclic":
            if ud is None or inst is None:
                raise ScenarioError(f"{ctx}: cyclic links must belong to a unit")
            endpoints = (f"{inst}.{ud.master}",) + tuple(
                f"{inst}.{d}" for d in ud.devices
            )
        else:
            if ld.src is None or ld.dst is None:
                raise ScenarioError(f"{ctx}: switched links need 'from' and 'to'")
            endpoints = (
                self._resolve(ld.src, ud, inst, ctx),
                self._resolve(ld.dst, ud, inst, ctx),
            )
        return Link(name, ld.kind, endpoints, ld.rate_bps, ld.frame_reliability, inst)

    def _expand_flow(self, fd: FlowDef, ud: UnitDef | None, inst: str | None) -> FlowSpec:
        name = fd.name if inst is None else f"{fd.name}@{inst}"
        ctx = f"flow {name}"
        target = None
        if fd.target is not None:
            target = fd.target if inst is None else f"{fd.target}@{inst}"
        return FlowSpec(
            name=name,
            template=fd.name,
            unit=inst,
            source=self._resolve(fd.source, ud, inst, ctx),
            dest=self._resolve(fd.dest, ud, inst, ctx),
            traffic=fd.traffic,
            period_ms=fd.period_ms,
            size_bytes=fd.size_bytes,
            priority=fd.priority,
            latency_req_ms=fd.latency_req_ms,
            reliability_req=fd.reliability_req,
            scheme=fd.scheme,
            allocation_bytes=fd.allocation_bytes,
            pool_bytes=fd.pool_bytes,
            group=fd.group,
            target=target,
            frames_per_cycle=fd.frames_per_cycle,
        )

    # -- validation --------------------------------------------------------

    def _validate(self) -> None:
        if self.cycle_time_ms <= 0:
            raise ScenarioError("cycle_time_ms must be positive")
        if self.cycle_capacity_bytes <= 0:
            raise ScenarioError("cycle_capacity_bytes must be positive")
        for link in self.links.values():
            if not 0.0 <= link.frame_reliability <= 1.0:
                raise ScenarioError(
                    f"link {link.name}: frame_reliability must be in [0, 1]"
                )
            if link.kind == "switched" and (link.rate_bps is None or link.rate_bps <= 0):
                raise ScenarioError(f"link {link.name}: rate_bits_per_s must be positive")
        self._check_connected()
        flow_names = {f.name for f in self.flows}
        if len(flow_names) != len(self.flows):
            raise ScenarioError("duplicate flow names")
        by_name = {f.name: f for f in self.flows}
        for f in self.flows:
            ctx = f"flow {f.name}"
            if f.source == f.dest:
                raise ScenarioError(f"{ctx}: source equals destination")
            if f.period_ms <= 0 or f.size_bytes <= 0:
                raise ScenarioError(f"{ctx}: period_ms and size_bytes must be positive")
            if f.latency_req_ms <= 0 or not 0.0 < f.reliability_req <= 1.0:
                raise ScenarioError(f"{ctx}: requirements must be positive")
            if f.scheme == "fixed" and f.allocation_bytes is None:
                raise ScenarioError(f"{ctx}: fixed scheme needs allocation_bytes")
            if f.scheme == "shared" and (f.pool_bytes is None or f.group is None):
                raise ScenarioError(f"{ctx}: shared scheme needs pool_bytes and group")
            if f.scheme == "overwrite":
                if f.target is None:
                    raise ScenarioError(f"{ctx}: overwrite scheme needs a target")
                tgt = by_name.get(f.target)
                if tgt is None:
                    raise ScenarioError(f"{ctx}: unknown overwrite target {f.target!r}")
                if tgt.scheme != "deterministic":
                    raise ScenarioError(
                        f"{ctx}: overwrite target {f.target!r} is not deterministic"
                    )
            if f.scheme == "deterministic" and f.frames_per_cycle < 1:
                raise ScenarioError(f"{ctx}: frames_per_cycle must be >= 1")
            hops = self.route(f)
            if f.scheme == "none" and any(h.link.kind == "cyclic" for h in hops):
                raise ScenarioError(
                    f"{ctx}: crosses a cyclic link but binds no slice scheme"
                )
        for inst in self.unit_instances():
            try:
                self.cycle_spec(inst)
            except ValueError as exc:
                raise ScenarioError(f"unit {inst}: {exc}") from exc

    def _check_connected(self) -> None:
        if not self.nodes:
            return
        adj = self._adjacency()
        start = sorted(self.nodes)[0]
        seen = {start}
        stack = [start]
        while stack:
            for nbr, _ in adj.get(stack.pop(), ()):
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        missing = sorted(set(self.nodes) - seen)
        if missing:
            raise ScenarioError(f"topology is disconnected; unreachable: {missing}")

    # -- derived views -----------------------------------------------------

    def unit_instances(self) -> list[str]:
        out = []
        for ud in self.unit_defs:
            out.extend(f"{ud.name}{i}" for i in range(1, ud.count + 1))
        return out

    def _adjacency(self) -> dict[str, list[tuple[str, Link]]]:
        adj: dict[str, list[tuple[str, Link]]] = {n: [] for n in self.nodes}
        for link in self.links.values():
            if link.kind == "cyclic":
                master = link.endpoints[0]
                for dev in link.endpoints[1:]:
                    adj[master].append((dev, link))
                    adj[dev].append((master, link))
            else:
                a, b = link.endpoints
                adj[a].append((b, link))
                adj[b].append((a, link))
        for lst in adj.values():
            lst.sort(key=lambda pair: (pair[0], pair[1].name))
        return adj

    def route(self, flow: FlowSpec) -> list[Hop]:
        """Deterministic shortest path from flow source to destination."""
        if flow.source not in self.nodes:
            raise ScenarioError(f"flow {flow.name}: unknown node {flow.source!r}")
        if flow.dest not in self.nodes:
            raise ScenarioError(f"flow {flow.name}: unknown node {flow.dest!r}")
        if flow.source == flow.dest:
            raise ScenarioError(f"flow {flow.name}: source equals destination")
        adj = self._adjacency()
        prev: dict[str, tuple[str, Link]] = {}
        seen = {flow.source}
        frontier = [flow.source]
        while frontier and flow.dest not in seen:
            nxt: list[str] = []
            for node in frontier:
                for nbr, link in adj[node]:
                    if nbr not in seen:
                        seen.add(nbr)
                        prev[nbr] = (node, link)
                        nxt.append(nbr)
            frontier = nxt
        if flow.dest not in seen:
            raise ScenarioError(
                f"flow {flow.name}: no path from {flow.source!r} to {flow.dest!r}"
            )
        hops: list[Hop] = []
        node = flow.dest
        while node != flow.source:
            src, link = prev[node]
            hops.append(Hop(link, src, node))
            node = src
        hops.reverse()
        return hops

    def arrival_model(self, flow: FlowSpec, lam: float | None = None) -> ArrivalModel:
        """Per-cycle frame-count model of a flow on its cyclic segment."""
        cycle = self.cycle_time_ms
        if flow.traffic == "poisson":
            mean = cycle / flow.period_ms if lam is None else lam
            return Poisson(mean, flow.frame_size)
        if flow.period_ms <= cycle:
            frames = flow.frames_per_cycle if flow.scheme == "deterministic" else 1
            return Deterministic(frames, flow.frame_size)
        # Periodic with a period spanning many cycles: transmits in a
        # cycle-fraction of the cycles.
        p = cycle / flow.period_ms
        return Pmf((1.0 - p, p), flow.frame_size)

    def _scheme_object(
        self, flow: FlowSpec, pool_cache: dict[str, SharedPool]
    ) -> SliceScheme | None:
        if flow.scheme == "deterministic" or flow.scheme == "none":
            return None
        if flow.scheme == "fixed":
            return Fixed(flow.allocation_bytes)
        if flow.scheme == "shared":
            key = f"{flow.group}@{flow.unit}"
            if key not in pool_cache:
                pool_cache[key] = SharedPool(flow.pool_bytes, (key,))
            return pool_cache[key]
        return Overwrite(flow.target)

    def cycle_spec(self, unit_instance: str) -> CycleSpec:
        """CycleSpec of one unit instance, for the analytic/simulated schemes."""
        pool_cache: dict[str, SharedPool] = {}
        apps = []
        for f in self.flows:
            if f.unit != unit_instance or f.scheme == "none":
                continue
            hops = self.route(f)
            if not any(h.link.kind == "cyclic" for h in hops):
                continue
            apps.append(CycleApp(f.name, self.arrival_model(f), self._scheme_object(f, pool_cache)))
        return CycleSpec(self.cycle_time_ms, self.cycle_capacity_bytes, tuple(apps))


# ---------------------------------------------------------------------------
# Parsing.
# ---------------------------------------------------------------------------

_NETWORK_KEYS = {"name", "cycle_time_ms", "cycle_capacity_bytes"}


def _strip(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text into a fully validated model."""
    sections: list[tuple[str, str, dict[str, str], int]] = []
    current: dict[str, str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioFormatError("unterminated section header", lineno, len(raw))
            parts = line[1:-1].split()
            if len(parts) == 1 and parts[0] == "network":
                kind, name = "network", ""
            elif len(parts) == 2 and parts[0] in ("node", "unit", "link", "flow"):
                kind, name = parts
            else:
                raise ScenarioFormatError(f"bad section header {line!r}", lineno)
            current = {}
            sections.append((kind, name, current, lineno))
            continue
        if "=" not in line:
            raise ScenarioFormatError("expected 'key = value'", lineno, 1 + len(raw) - len(raw.lstrip()))
        if current is None:
            raise ScenarioFormatError("key outside any section", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ScenarioFormatError("empty key or value", lineno, 1 + line.index("="))
        if key in current:
            raise ScenarioFormatError(f"duplicate key {key!r}", lineno)
        current[key] = value
    return _build(sections)


def _number(fields: dict[str, str], key: str, where: str, lineno: int) -> float:
    try:
        return float(fields[key])
    except KeyError:
        raise ScenarioFormatError(f"{where}: missing key {key!r}", lineno) from None
    except ValueError:
        raise ScenarioFormatError(f"{where}: {key} is not a number", lineno) from None


def _choice(fields: dict[str, str], key: str, allowed, where: str, lineno: int) -> str:
    value = fields.get(key)
    if value is None:
        raise ScenarioFormatError(f"{where}: missing key {key!r}", lineno)
    if value not in allowed:
        raise ScenarioFormatError(
            f"{where}: {key} must be one of {', '.join(allowed)}", lineno
        )
    return value


def _build(sections) -> Scenario:
    network: dict[str, str] | None = None
    network_line = 1
    node_defs: list[NodeDef] = []
    unit_defs: list[UnitDef] = []
    link_defs: list[LinkDef] = []
    flow_defs: list[FlowDef] = []
    for kind, name, fields, lineno in sections:
        where = f"[{kind} {name}]".replace(" ]", "]")
        if kind == "network":
            if network is not None:
                raise ScenarioFormatError("duplicate [network] section", lineno)
            network, network_line = fields, lineno
        elif kind == "node":
            node_defs.append(
                NodeDef(name, _choice(fields, "kind", ("switch", "cloud"), where, lineno))
            )
        elif kind == "unit":
            count = int(_number(fields, "count", where, lineno))
            if count < 1:
                raise ScenarioFormatError(f"{where}: count must be >= 1", lineno)
            master = fields.get("master")
            devices = tuple(fields.get("devices", "").split())
            if not master or not devices:
                raise ScenarioFormatError(f"{where}: needs master and devices", lineno)
            unit_defs.append(UnitDef(name, count, master, devices))
        elif kind == "link":
            lkind = _choice(fields, "kind", LINK_KINDS, where, lineno)
            rate = None
            if "rate_bits_per_s" in fields:
                rate = _number(fields, "rate_bits_per_s", where, lineno)
            link_defs.append(
                LinkDef(
                    name,
                    lkind,
                    fields.get("unit"),
                    fields.get("from"),
                    fields.get("to"),
                    rate,
                    _number(fields, "frame_reliability", where, lineno),
                )
            )
        elif kind == "flow":
            scheme = _choice(fields, "scheme", SCHEME_KINDS, where, lineno)
            flow_defs.append(
                FlowDef(
                    name=name,
                    unit=fields.get("unit"),
                    source=fields.get("source", ""),
                    dest=fields.get("dest", ""),
                    traffic=_choice(fields, "traffic", TRAFFIC_KINDS, where, lineno),
                    period_ms=_number(fields, "period_ms", where, lineno),
                    size_bytes=_number(fields, "size_bytes", where, lineno),
                    priority=_choice(fields, "priority", PRIORITIES, where, lineno),
                    latency_req_ms=_number(fields, "latency_req_ms", where, lineno),
                    reliability_req=_number(fields, "reliability_req", where, lineno),
                    scheme=scheme,
                    allocation_bytes=_number(fields, "allocation_bytes", where, lineno)
                    if "allocation_bytes" in fields
                    else None,
                    pool_bytes=_number(fields, "pool_bytes", where, lineno)
                    if "pool_bytes" in fields
                    else None,
                    group=fields.get("group"),
                    target=fields.get("target"),
                    frames_per_cycle=int(fields.get("frames_per_cycle", "1")),
                )
            )
    if network is None:
        raise ScenarioFormatError("missing [network] section", network_line)
    return Scenario(
        name=network.get("name", "unnamed"),
        cycle_time_ms=_number(network, "cycle_time_ms", "[network]", network_line),
        cycle_capacity_bytes=_number(
            network, "cycle_capacity_bytes", "[network]", network_line
        ),
        node_defs=tuple(node_defs),
        unit_defs=tuple(unit_defs),
        link_defs=tuple(link_defs),
        flow_defs=tuple(flow_defs),
    )


# ---------------------------------------------------------------------------
# Serialization (round-trips through parse_scenario).
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(value)


def serialize_scenario(scn: Scenario) -> str:
    out: list[str] = ["[network]", f"name = {scn.name}"]
    out.append(f"cycle_time_ms = {_fmt(scn.cycle_time_ms)}")
    out.append(f"cycle_capacity_bytes = {_fmt(scn.cycle_capacity_bytes)}")
    for nd in scn.node_defs:
        out += ["", f"[node {nd.name}]", f"kind = {nd.kind}"]
    for ud in scn.unit_defs:
        out += [
            "",
            f"[unit {ud.name}]",
            f"count = {ud.count}",
            f"master = {ud.master}",
            f"devices = {' '.join(ud.devices)}",
        ]
    for ld in scn.link_defs:
        out += ["", f"[link {ld.name}]", f"kind = {ld.kind}"]
        if ld.unit is not None:
            out.append(f"unit = {ld.unit}")
        if ld.src is not None:
            out.append(f"from = {ld.src}")
        if ld.dst is not None:
            out.append(f"to = {ld.dst}")
        if ld.rate_bps is not None:
            out.append(f"rate_bits_per_s = {_fmt(ld.rate_bps)}")
        out.append(f"frame_reliability = {_fmt(ld.frame_reliability)}")
    for fd in scn.flow_defs:
        out += ["", f"[flow {fd.name}]"]
        if fd.unit is not None:
            out.append(f"unit = {fd.unit}")
        out.append(f"source = {fd.source}")
        out.append(f"dest = {fd.dest}")
        out.append(f"traffic = {fd.traffic}")
        out.append(f"period_ms = {_fmt(fd.period_ms)}")
        out.append(f"size_bytes = {_fmt(fd.size_bytes)}")
        out.append(f"priority = {fd.priority}")
        out.append(f"latency_req_ms = {_fmt(fd.latency_req_ms)}")
        out.append(f"reliability_req = {_fmt(fd.reliability_req)}")
        out.append(f"scheme = {fd.scheme}")
        if fd.allocation_bytes is not None:
            out.append(f"allocation_bytes = {_fmt(fd.allocation_bytes)}")
        if fd.pool_bytes is not None:
            out.append(f"pool_bytes = {_fmt(fd.pool_bytes)}")
        if fd.group is not None:
            out.append(f"group = {fd.group}")
        if fd.target is not None:
            out.append(f"target = {fd.target}")
        out.append(f"frames_per_cycle = {fd.frames_per_cycle}")
    return "\n".join(out) + "\n"


def load_case_study() -> Scenario:
    """The bundled personalized-medicine case-study scenario."""
    text = files("sliceqos.data").joinpath("case_study.scn").read_text("utf-8")
    return parse_scenario(text)
