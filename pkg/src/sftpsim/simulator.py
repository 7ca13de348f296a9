"""Scenario loading, the end-to-end phase runner, and report assembly.

A run executes the phases in order: threshold the topology, split into
components, sweep liveness, rank the connection table, repair each failed
node, discover a route, then deliver packets with drop detection and
fallback rerouting. Everything is deterministic for a given scenario and
seed; the seeded generator feeds collision mode only.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from statistics import fmean

from .errors import NoRouteError, NoSafeRouteError, ScenarioError
from .fault_tolerance import (
    ACTIVE,
    ConnectionTable,
    NodeStatus,
    build_connection_table,
    ping_sweep,
    repair_failure,
)
from .routing import (
    DataPacket,
    DetectionEvent,
    Discovery,
    DeliveryOutcome,
    Route,
    RouteReply,
    FloodTrace,
    deliver_data,
    detection_events,
    discover_route,
    fallback_route,
)
from .scheduler import SimEvent  # re-exported: the scheduler is part of this engine
from .topology import (
    CoverageGraph,
    NodeId,
    apply_threshold,
    build_adjacency,
    connected_components,
    degree,
    label_sort_key,
)

__all__ = [
    "Scenario",
    "Metrics",
    "PacketResult",
    "Report",
    "SimEvent",
    "load_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "prepare_network",
    "run_scenario",
    "compute_metrics",
    "report_to_dict",
    "report_to_json",
]

OUTCOME_OK = "ok"
OUTCOME_NO_ROUTE = "no_route"
OUTCOME_NO_SAFE_ROUTE = "no_safe_route"

_SCENARIO_FIELDS = {
    "nodes", "edges", "threshold", "source", "dest", "failed", "malicious",
    "delayers", "packet_count", "payload_size", "collision_mode", "seed",
}


@dataclass(frozen=True)
class Scenario:
    """Full description of one experiment.

    `collision_p` of None means collisions are off; `delayers` maps a node
    to its forwarding multiplier. Attack sets never include the endpoints.
    """

    nodes: tuple[NodeId, ...]
    edges: tuple[tuple[NodeId, NodeId, int], ...]
    threshold: int
    source: NodeId
    dest: NodeId
    failed: tuple[NodeId, ...] = ()
    malicious: tuple[NodeId, ...] = ()
    delayers: tuple[tuple[NodeId, float], ...] = ()
    packet_count: int = 1
    payload_size: int = 100
    collision_p: float | None = None
    seed: int = 0

    @property
    def delay_factor(self) -> dict[NodeId, float]:
        return dict(self.delayers)


def _require(condition, message, field):
    if not condition:
        raise ScenarioError(message, field=field)


def scenario_from_dict(data: dict) -> Scenario:
    """Validate a raw scenario mapping; errors name the offending field."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(data) - _SCENARIO_FIELDS
    _require(not unknown, f"unknown field(s) {sorted(unknown)}", field="scenario")
    for name in ("nodes", "edges", "threshold", "source", "dest"):
        _require(name in data, "required field is missing", field=name)

    nodes = data["nodes"]
    _require(isinstance(nodes, list) and nodes, "must be a non-empty array of labels", field="nodes")
    for lab in nodes:
        _require(isinstance(lab, str) and lab and lab.split() == [lab],
                 f"label {lab!r} must be a non-empty whitespace-free string", field="nodes")
    _require(len(set(nodes)) == len(nodes), "labels must be unique", field="nodes")
    node_set = set(nodes)

    edges = data["edges"]
    _require(isinstance(edges, list), "must be an array of [u, v, w] triples", field="edges")
    parsed_edges = []
    for item in edges:
        _require(isinstance(item, (list, tuple)) and len(item) == 3,
                 f"edge {item!r} must be a [u, v, w] triple", field="edges")
        u, v, w = item
        _require(u in node_set and v in node_set,
                 f"edge {item!r} references an unknown node", field="edges")
        _require(u != v, f"edge {item!r} is a self loop", field="edges")
        _require(isinstance(w, int) and not isinstance(w, bool) and w > 0,
                 f"edge {item!r} weight must be a positive integer", field="edges")
        parsed_edges.append((u, v, w))

    threshold = data["threshold"]
    _require(isinstance(threshold, int) and threshold >= 1,
             "must be an integer >= 1", field="threshold")

    source, dest = data["source"], data["dest"]
    _require(source in node_set, f"{source!r} is not a node", field="source")
    _require(dest in node_set, f"{dest!r} is not a node", field="dest")
    _require(source != dest, "source and dest must differ", field="dest")

    def node_list(name):
        raw = data.get(name, [])
        _require(isinstance(raw, list), "must be an array of labels", field=name)
        for lab in raw:
            _require(lab in node_set, f"{lab!r} is not a node", field=name)
        _require(len(set(raw)) == len(raw), "labels must be unique", field=name)
        _require(source not in raw and dest not in raw,
                 "must not contain the source or destination", field=name)
        return tuple(sorted(raw, key=label_sort_key))

    failed = node_list("failed")
    malicious = node_list("malicious")

    raw_delayers = data.get("delayers", {})
    _require(isinstance(raw_delayers, dict), "must map node label to multiplier", field="delayers")
    delayers = []
    for lab, mult in raw_delayers.items():
        _require(lab in node_set, f"{lab!r} is not a node", field="delayers")
        _require(isinstance(mult, (int, float)) and not isinstance(mult, bool) and mult > 0,
                 f"multiplier for {lab!r} must be a positive number", field="delayers")
        delayers.append((lab, float(mult)))
    delayers.sort(key=lambda item: label_sort_key(item[0]))

    packet_count = data.get("packet_count", 1)
    _require(isinstance(packet_count, int) and packet_count >= 0,
             "must be an integer >= 0", field="packet_count")
    payload_size = data.get("payload_size", 100)
    _require(isinstance(payload_size, int) and payload_size >= 0,
             "must be an integer >= 0 (bytes)", field="payload_size")

    mode = data.get("collision_mode", "off")
    if mode == "off":
        collision_p = None
    elif isinstance(mode, dict) and set(mode) == {"on"}:
        p = mode["on"]
        _require(isinstance(p, (int, float)) and 0.0 <= p <= 1.0,
                 "probability must be in [0, 1]", field="collision_mode")
        collision_p = float(p)
    else:
        raise ScenarioError('must be "off" or {"on": p}', field="collision_mode")

    seed = data.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool)
             and -(2 ** 63) <= seed < 2 ** 64, "must be a 64-bit integer", field="seed")

    return Scenario(
        nodes=tuple(nodes),
        edges=tuple(parsed_edges),
        threshold=threshold,
        source=source,
        dest=dest,
        failed=failed,
        malicious=malicious,
        delayers=tuple(delayers),
        packet_count=packet_count,
        payload_size=payload_size,
        collision_p=collision_p,
        seed=seed,
    )


def load_scenario(path) -> Scenario:
    """Read and validate a scenario JSON file.

    Raises ScenarioError with a line/field diagnostic on malformed input;
    I/O problems propagate as OSError.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(data)


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "nodes": list(s.nodes),
        "edges": [list(edge) for edge in s.edges],
        "threshold": s.threshold,
        "source": s.source,
        "dest": s.dest,
        "failed": list(s.failed),
        "malicious": list(s.malicious),
        "delayers": {lab: mult for lab, mult in s.delayers},
        "packet_count": s.packet_count,
        "payload_size": s.payload_size,
        "collision_mode": "off" if s.collision_p is None else {"on": s.collision_p},
        "seed": s.seed,
    }


@dataclass(frozen=True)
class Metrics:
    """Network efficiency figures for one run.

    Delay is the mean tick count over delivered payloads, the delivery
    rate is delivered over sent unique payloads, and throughput is
    delivered payload bytes per data-phase tick.
    """

    end_to_end_delay: float | None
    packet_delivery_rate: float | None
    throughput: float


@dataclass(frozen=True)
class PacketResult:
    """One payload's fate across its transmission attempts."""

    sequence: int
    payload_size: int
    attempts: tuple[DeliveryOutcome, ...]
    delivered: bool
    delay: int | None
    failure: str | None = None


def compute_metrics(packets: list[PacketResult] | tuple[PacketResult, ...], clock: int) -> Metrics:
    """Fold per-payload outcomes into the efficiency metrics.

    Retransmitted payloads count once. With no payloads at all the rate
    and delay are reported as absent.
    """
    sent = len(packets)
    delivered = [p for p in packets if p.delivered]
    delay = fmean(p.delay for p in delivered) if delivered else None
    rate = len(delivered) / sent if sent else None
    payload_bytes = sum(p.payload_size for p in delivered)
    throughput = payload_bytes / clock if clock > 0 else 0.0
    return Metrics(end_to_end_delay=delay, packet_delivery_rate=rate, throughput=throughput)


@dataclass(frozen=True)
class NetworkState:
    """Phase outputs shared by the CLI subcommands and the full run."""

    coverage: CoverageGraph
    components: tuple[tuple[NodeId, ...], ...]
    statuses: tuple[NodeStatus, ...]
    connection_table: ConnectionTable
    repaired: CoverageGraph
    repaired_edges: tuple[tuple[NodeId, NodeId, int], ...]


def prepare_network(s: Scenario) -> NetworkState:
    """Run the pre-routing phases: threshold, components, sweep, table, repair."""
    adjacency = build_adjacency(s.nodes, s.edges)
    coverage = apply_threshold(adjacency, s.threshold)
    components = tuple(tuple(comp) for comp in connected_components(coverage))
    statuses = tuple(ping_sweep(coverage, s.source, s.failed))
    active = [st.node for st in statuses if st.state == ACTIVE]
    table = build_connection_table(coverage, active)

    repaired = coverage
    # inactive nodes are not ranked in the table, so order repairs directly
    repair_order = sorted(s.failed, key=lambda n: (-degree(coverage, n), label_sort_key(n)))
    for node in repair_order:
        repaired = repair_failure(repaired, table, node)
    before = set(coverage.edges())
    repaired_edges = tuple(e for e in repaired.edges() if e not in before)
    return NetworkState(coverage, components, statuses, table, repaired, repaired_edges)


@dataclass(frozen=True)
class Report:
    scenario: Scenario
    network: NetworkState
    primary: Route | None
    recorded: tuple[Route, ...]
    reply: RouteReply | None
    detections: tuple[DetectionEvent, ...]
    packets: tuple[PacketResult, ...]
    transmissions: int
    metrics: Metrics
    trace: FloodTrace | None
    outcome: str  # OUTCOME_OK, OUTCOME_NO_ROUTE or OUTCOME_NO_SAFE_ROUTE


def run_scenario(s: Scenario) -> Report:
    """Execute one scenario end to end and gather everything into a report.

    Undeliverable runs still complete: a missing route or the exhaustion
    of safe fallback routes becomes the report outcome, with the metrics
    counting the intended payloads as sent and undelivered.
    """
    network = prepare_network(s)
    rng = random.Random(s.seed)

    try:
        discovery = discover_route(
            network.repaired, s.source, s.dest, collision_p=s.collision_p, rng=rng
        )
    except NoRouteError:
        packets = tuple(
            PacketResult(seq, s.payload_size, (), False, None, failure=OUTCOME_NO_ROUTE)
            for seq in range(s.packet_count)
        )
        return Report(
            scenario=s,
            network=network,
            primary=None,
            recorded=(),
            reply=None,
            detections=(),
            packets=packets,
            transmissions=0,
            metrics=compute_metrics(packets, clock=0),
            trace=None,
            outcome=OUTCOME_NO_ROUTE,
        )

    delay_factor = s.delay_factor
    detections: list[DetectionEvent] = []
    flagged: set[tuple[NodeId, str]] = set()
    excluded: set[NodeId] = set()
    packets: list[PacketResult] = []
    transmissions = 0
    current = discovery.primary
    exhausted = False
    clock = 0

    for seq in range(s.packet_count):
        if exhausted:
            packets.append(
                PacketResult(seq, s.payload_size, (), False, None, failure=OUTCOME_NO_SAFE_ROUTE)
            )
            continue
        attempts: list[DeliveryOutcome] = []
        result = None
        while result is None:
            packet = DataPacket(seq, current, s.payload_size, send_timestamp=clock)
            outcome = deliver_data(network.repaired, current, s.malicious, delay_factor, packet)
            transmissions += 1
            attempts.append(outcome)
            clock = outcome.finished_tick
            for event in detection_events(outcome):
                if (event.node, event.kind) not in flagged:
                    flagged.add((event.node, event.kind))
                    detections.append(event)
            if outcome.delivered:
                result = PacketResult(
                    seq, s.payload_size, tuple(attempts), True, outcome.end_to_end_delay
                )
            else:
                excluded.add(outcome.dropped_at)
                try:
                    current = fallback_route(discovery.recorded, excluded)
                except NoSafeRouteError:
                    exhausted = True
                    result = PacketResult(
                        seq, s.payload_size, tuple(attempts), False, None,
                        failure=OUTCOME_NO_SAFE_ROUTE,
                    )
        packets.append(result)

    outcome_kind = OUTCOME_NO_SAFE_ROUTE if exhausted else OUTCOME_OK
    return Report(
        scenario=s,
        network=network,
        primary=discovery.primary,
        recorded=discovery.recorded,
        reply=discovery.reply,
        detections=tuple(detections),
        packets=tuple(packets),
        transmissions=transmissions,
        metrics=compute_metrics(packets, clock),
        trace=discovery.trace,
        outcome=outcome_kind,
    )


def _route_dict(route: Route) -> dict:
    return {"hops": list(route.hops), "total_delay": route.total_delay}


def _attempt_dict(outcome: DeliveryOutcome) -> dict:
    return {
        "route": list(outcome.route.hops),
        "status": "delivered" if outcome.delivered else "dropped",
        "send_tick": outcome.packet.send_timestamp,
        "finished_tick": outcome.finished_tick,
        "hop_timestamps": list(outcome.packet.hop_timestamps),
        "dropped_at": outcome.dropped_at,
        "drop_hop_index": outcome.drop_hop_index,
        "delayed": [
            {"node": f.node, "hop_index": f.hop_index, "observed": f.observed, "expected": f.expected}
            for f in outcome.delayed
        ],
    }


def report_to_dict(report: Report) -> dict:
    """Plain-data view of a report with a stable key order, ready for JSON."""
    net = report.network
    trace = report.trace
    return {
        "scenario": scenario_to_dict(report.scenario),
        "outcome": report.outcome,
        "coverage_matrix": {
            "nodes": list(net.coverage.labels),
            "threshold": net.coverage.threshold,
            "weights": [list(row) for row in net.coverage.base.weights],
        },
        "components": [list(comp) for comp in net.components],
        "statuses": [{"node": st.node, "state": st.state} for st in net.statuses],
        "connection_table": [
            {"node": e.node, "links": e.links, "priority": e.priority}
            for e in net.connection_table
        ],
        "repaired_edges": [list(edge) for edge in net.repaired_edges],
        "primary_route": list(report.primary.hops) if report.primary else None,
        "primary_route_delay": report.primary.total_delay if report.primary else None,
        "recorded_routes": [_route_dict(r) for r in report.recorded],
        "detection_events": [
            {
                "node": ev.node,
                "kind": ev.kind,
                "hop_index": ev.hop_index,
                "evidence": {name: value for name, value in ev.evidence},
            }
            for ev in report.detections
        ],
        "packets": [
            {
                "sequence": p.sequence,
                "payload_size": p.payload_size,
                "delivered": p.delivered,
                "delay": p.delay,
                "failure": p.failure,
                "attempts": [_attempt_dict(a) for a in p.attempts],
            }
            for p in report.packets
        ],
        "transmissions": report.transmissions,
        "metrics": {
            "end_to_end_delay": report.metrics.end_to_end_delay,
            "packet_delivery_rate": report.metrics.packet_delivery_rate,
            "throughput": report.metrics.throughput,
        },
        "flooding_trace": None if trace is None else {
            "request_id": trace.request_id,
            "source": trace.source,
            "dest": trace.dest,
            "nodes": list(trace.nodes),
            "events": [
                {
                    "tick": ev.tick,
                    "kind": ev.kind,
                    "node": ev.node,
                    "origin": ev.origin,
                    "path": list(ev.path),
                }
                for ev in trace.events
            ],
        },
    }


def report_to_json(report: Report) -> str:
    return json.dumps(report_to_dict(report), indent=2, ensure_ascii=True) + "\n"
