"""Source-routed discovery by request flooding, data delivery along the
recorded route, and detection of packet-dropping or packet-delaying nodes.

Discovery runs two layers on one event queue. The radio layer is the
flooding trace: every node rebroadcasts a request at most once and the
destination never forwards. The recording layer lets every request copy
keep its own identifier list, so the destination records one route per
loop-free arrival; that recorded list, ordered by arrival tick with ties
broken by canonical label order, is what fallback routing consumes after
a dropper is excluded.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from . import scheduler
from .errors import (
    InvalidRouteError,
    NoRouteError,
    NoSafeRouteError,
    SameEndpointError,
)
from .scheduler import EventQueue, SimEvent
from .topology import CoverageGraph, NodeId, component_of, label_sort_key

# extra ticks past a full hop round trip before an acknowledgment is declared lost
ACK_GRACE = 1
# a hop slower than DELAY_SUSPICION x its link weight flags the forwarder
DELAY_SUSPICION = 2

DROPPER = "dropper"
DELAYER = "delayer"


@dataclass(frozen=True)
class RouteRequest:
    """A flooded route request carrying the identifiers traversed so far."""

    request_id: int
    source: NodeId
    dest: NodeId
    identifiers: tuple[NodeId, ...]

    def __post_init__(self):
        if not self.identifiers or self.identifiers[0] != self.source:
            raise ValueError("identifier list must begin at the source")
        if len(set(self.identifiers)) != len(self.identifiers):
            raise ValueError("identifier list revisits a node")


@dataclass(frozen=True)
class RouteReply:
    """Route carried back to the source, listed source-first."""

    route: tuple[NodeId, ...]


@dataclass(frozen=True)
class Route:
    hops: tuple[NodeId, ...]
    total_delay: int

    def __contains__(self, node: NodeId) -> bool:
        return node in self.hops


def make_route(g: CoverageGraph, hops: Sequence[NodeId]) -> Route:
    """Validate `hops` against the graph and sum the per-hop weights."""
    hops = tuple(hops)
    if len(hops) < 2:
        raise InvalidRouteError("a route needs at least two hops")
    if len(set(hops)) != len(hops):
        raise InvalidRouteError("route revisits a node")
    total = 0
    for u, v in zip(hops, hops[1:]):
        w = g.weight(u, v)
        if w == 0:
            raise InvalidRouteError(f"{u}-{v} is not a link")
        total += w
    return Route(hops, total)


@dataclass(frozen=True)
class DataPacket:
    sequence: int
    route: Route
    payload_size: int
    send_timestamp: int
    hop_timestamps: tuple[int, ...] = ()

    def __post_init__(self):
        previous = self.send_timestamp
        for ts in self.hop_timestamps:
            if ts <= previous:
                raise ValueError("hop timestamps must strictly increase")
            previous = ts


@dataclass(frozen=True)
class DelayFlag:
    node: NodeId
    hop_index: int
    observed: int
    expected: int


@dataclass(frozen=True)
class DeliveryOutcome:
    """Result of walking one packet along one route.

    `finished_tick` is the destination receive tick when delivered,
    otherwise the tick the fatal acknowledgment timeout fired.
    `drop_hop_index` indexes the hop (edge) whose receiver swallowed the
    packet; `delayed` flags forwarders whose hop latency exceeded
    DELAY_SUSPICION x the link weight.
    """

    packet: DataPacket
    route: Route
    delivered: bool
    finished_tick: int
    dropped_at: NodeId | None = None
    drop_hop_index: int | None = None
    delayed: tuple[DelayFlag, ...] = ()
    events: tuple[SimEvent, ...] = ()

    @property
    def end_to_end_delay(self) -> int | None:
        if not self.delivered:
            return None
        return self.finished_tick - self.packet.send_timestamp


@dataclass(frozen=True)
class DetectionEvent:
    node: NodeId
    kind: str  # DROPPER or DELAYER
    hop_index: int
    evidence: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class FloodEvent:
    tick: int
    kind: str  # broadcast, forward, suppressed, loop, recorded, collided, rrep
    node: NodeId
    origin: NodeId | None = None
    path: tuple[NodeId, ...] = ()


@dataclass(frozen=True)
class FloodTrace:
    """Chronological log of one discovery flood plus the reply traversal."""

    request_id: int
    source: NodeId
    dest: NodeId
    nodes: tuple[NodeId, ...]
    events: tuple[FloodEvent, ...]

    def broadcast_counts(self) -> dict[NodeId, int]:
        counts: dict[NodeId, int] = {}
        for ev in self.events:
            if ev.kind == "broadcast":
                counts[ev.node] = counts.get(ev.node, 0) + 1
        return counts

    def to_dot(self) -> str:
        """Render one DOT digraph per tick, mirroring the flooding rounds.

        Nodes are annotated with their radio state: broadcasting this tick,
        already forwarded, suppressed duplicate, or recording destination.
        Arrows show the arrivals of that tick; reply hops are dashed.
        """
        by_tick: dict[int, list[FloodEvent]] = {}
        for ev in self.events:
            by_tick.setdefault(ev.tick, []).append(ev)
        forwarded: set[NodeId] = set()
        lines = ["// flooding trace: one digraph per tick"]
        for tick in sorted(by_tick):
            evs = by_tick[tick]
            casting = {e.node for e in evs if e.kind == "broadcast"}
            suppressed = {e.node for e in evs if e.kind == "suppressed"}
            recording = {e.node for e in evs if e.kind == "recorded"}
            arrows = sorted(
                {(e.origin, e.node, e.kind == "rrep") for e in evs if e.origin is not None}
            )
            lines.append(f'digraph "tick_{tick}" {{')
            lines.append(f'  label="tick {tick}"; node [shape=circle];')
            for node in self.nodes:
                attrs = []
                if node == self.dest:
                    attrs.append("shape=doublecircle")
                if node in casting:
                    attrs.append('fillcolor=gold style=filled comment="broadcasting"')
                elif node in recording:
                    attrs.append('fillcolor=steelblue style=filled comment="recorded"')
                elif node in suppressed:
                    attrs.append('fillcolor=orange style=filled comment="suppressed"')
                elif node in forwarded:
                    attrs.append('fillcolor=lightgray style=filled comment="forwarded"')
                lines.append(f'  "{node}" [{" ".join(attrs)}];' if attrs else f'  "{node}";')
            for origin, node, is_reply in arrows:
                style = " [style=dashed]" if is_reply else ""
                lines.append(f'  "{origin}" -> "{node}"{style};')
            lines.append("}")
            forwarded |= casting
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Discovery:
    primary: Route
    recorded: tuple[Route, ...]
    reply: RouteReply
    trace: FloodTrace


def route_sort_key(hops: Sequence[NodeId]) -> tuple[str, ...]:
    return tuple(label_sort_key(h) for h in hops)


def discover_route(
    g: CoverageGraph,
    source: NodeId,
    dest: NodeId,
    *,
    request_id: int = 0,
    collision_p: float | None = None,
    rng: random.Random | None = None,
) -> Discovery:
    """Flood a route request from `source` and collect routes arriving at `dest`.

    Forwarding over an edge costs its weight in ticks. Each node
    rebroadcasts the request at most once; the destination records every
    arrival but never forwards. The recorded list is ordered by arrival
    tick, ties by canonical label order of the hop sequence, and the
    primary route is its head. The reply retraces the primary route in
    reverse and is logged in the trace.

    With `collision_p` set, two or more arrivals hitting one node on the
    same tick are all lost with that probability, drawn from `rng`.

    Raises:
        SameEndpointError: source equals dest.
        NoRouteError: dest is unreachable (or the flood died to collisions).
    """
    if source == dest:
        raise SameEndpointError(f"source and destination are both {source!r}")
    g.base.index(source)
    g.base.index(dest)
    comp = component_of(g, source)
    if dest not in comp:
        raise NoRouteError(f"no path from {source!r} to {dest!r}")
    if collision_p is not None and rng is None:
        rng = random.Random(0)

    participants = tuple(lab for lab in g.labels if lab in comp)
    queue = EventQueue()
    events: list[FloodEvent] = []
    forwarded: set[NodeId] = set()
    arrivals: dict[tuple[NodeId, int], int] = {}
    collided: dict[tuple[NodeId, int], bool] = {}
    recorded_raw: list[tuple[int, tuple[NodeId, ...]]] = []

    def broadcast(node: NodeId, path: tuple[NodeId, ...], tick: int) -> None:
        events.append(FloodEvent(tick, "broadcast", node, path=path))
        forwarded.add(node)
        relay(node, path, tick)

    def relay(node: NodeId, path: tuple[NodeId, ...], tick: int) -> None:
        for nb in g.neighbors(node):
            at = tick + g.weight(node, nb)
            queue.schedule(at, scheduler.RECEIVE, node=nb, origin=node, path=path)
            arrivals[(nb, at)] = arrivals.get((nb, at), 0) + 1

    broadcast(source, (source,), 0)
    while len(queue):
        event = queue.pop()
        node = event.payload["node"]
        origin = event.payload["origin"]
        path = event.payload["path"]
        tick = event.tick

        if collision_p is not None and arrivals[(node, tick)] >= 2:
            slot = (node, tick)
            if slot not in collided:
                collided[slot] = rng.random() < collision_p
            if collided[slot]:
                events.append(FloodEvent(tick, "collided", node, origin, path))
                continue
        if node in path:
            events.append(FloodEvent(tick, "loop", node, origin, path))
            continue

        request = RouteRequest(request_id, source, dest, path + (node,))
        if node == dest:
            events.append(FloodEvent(tick, "recorded", node, origin, request.identifiers))
            recorded_raw.append((tick, request.identifiers))
            continue
        if node in forwarded:
            # the radio stays quiet, but the copy keeps its identifier list
            events.append(FloodEvent(tick, "suppressed", node, origin, request.identifiers))
            relay(node, request.identifiers, tick)
        else:
            events.append(FloodEvent(tick, "forward", node, origin, request.identifiers))
            broadcast(node, request.identifiers, tick)

    if not recorded_raw:
        raise NoRouteError(f"no request from {source!r} reached {dest!r}")

    recorded_raw.sort(key=lambda item: (item[0], route_sort_key(item[1])))
    recorded = tuple(make_route(g, hops) for _, hops in recorded_raw)
    primary = recorded[0]

    reply = RouteReply(route=primary.hops)
    tick = recorded_raw[0][0]
    reversed_hops = tuple(reversed(primary.hops))
    for u, v in zip(reversed_hops, reversed_hops[1:]):
        tick += g.weight(u, v)
        events.append(FloodEvent(tick, "rrep", v, origin=u, path=reply.route))
    events.sort(key=lambda ev: ev.tick)

    trace = FloodTrace(request_id, source, dest, participants, tuple(events))
    return Discovery(primary, recorded, reply, trace)


def deliver_data(
    g: CoverageGraph,
    route: Route,
    malicious: Iterable[NodeId],
    delay_factor: Mapping[NodeId, float],
    packet: DataPacket,
) -> DeliveryOutcome:
    """Walk a packet along `route` hop by hop on the event queue.

    Every honest receiver acknowledges; a malicious intermediate swallows
    the packet and its silence is caught by the sender's acknowledgment
    timeout of 2 x weight + ACK_GRACE ticks. A delaying intermediate
    forwards after multiplier x weight ticks; the inflated hop latency is
    flagged from the recorded timestamps. Hop timestamps cover honest
    receivers only, in hop order.

    Raises:
        InvalidRouteError: a hop pair of `route` is not a link in `g`.
    """
    hops = make_route(g, route.hops).hops
    malicious = set(malicious)
    if hops[0] in malicious or hops[-1] in malicious:
        raise ValueError("attackers must be intermediates, not endpoints")

    queue = EventQueue()
    log: list[SimEvent] = []
    timestamps: list[int] = []
    delivered_tick: int | None = None
    dropped_at: NodeId | None = None
    drop_hop: int | None = None
    drop_tick: int | None = None

    def forward(hop: int, depart: int) -> None:
        sender, receiver = hops[hop], hops[hop + 1]
        w = g.weight(sender, receiver)
        latency = w
        if hop > 0 and sender in delay_factor:
            latency = max(1, int(delay_factor[sender] * w + 0.5))
        queue.schedule(depart + latency, scheduler.RECEIVE, node=receiver, origin=sender, hop=hop)
        if receiver in malicious:
            queue.schedule(
                depart + 2 * w + ACK_GRACE, scheduler.TIMEOUT, node=receiver, origin=sender, hop=hop
            )

    forward(0, packet.send_timestamp)
    while len(queue):
        event = queue.pop()
        log.append(event)
        node = event.payload["node"]
        hop = event.payload["hop"]
        if event.kind == scheduler.RECEIVE:
            if node in malicious:
                continue  # swallowed: no ack, no forward; the timeout is pending
            timestamps.append(event.tick)
            w = g.weight(event.payload["origin"], node)
            queue.schedule(event.tick + w, scheduler.ACK, node=event.payload["origin"], origin=node, hop=hop)
            if node == hops[-1]:
                delivered_tick = event.tick
            else:
                forward(hop + 1, event.tick)
        elif event.kind == scheduler.TIMEOUT:
            dropped_at = node
            drop_hop = hop
            drop_tick = event.tick

    final_packet = replace(packet, hop_timestamps=tuple(timestamps))
    ticks = [packet.send_timestamp, *timestamps]
    delayed = []
    for i in range(len(timestamps)):
        expected = g.weight(hops[i], hops[i + 1])
        observed = ticks[i + 1] - ticks[i]
        if observed > DELAY_SUSPICION * expected:
            delayed.append(DelayFlag(hops[i], i, observed, expected))

    if dropped_at is not None:
        return DeliveryOutcome(
            packet=final_packet,
            route=route,
            delivered=False,
            finished_tick=drop_tick,
            dropped_at=dropped_at,
            drop_hop_index=drop_hop,
            delayed=tuple(delayed),
            events=tuple(log),
        )
    return DeliveryOutcome(
        packet=final_packet,
        route=route,
        delivered=True,
        finished_tick=delivered_tick,
        delayed=tuple(delayed),
        events=tuple(log),
    )


def detection_events(outcome: DeliveryOutcome) -> list[DetectionEvent]:
    """All attacker evidence carried by one delivery outcome."""
    found = []
    if outcome.dropped_at is not None:
        hop = outcome.drop_hop_index
        sent = ([outcome.packet.send_timestamp, *outcome.packet.hop_timestamps])[hop]
        found.append(
            DetectionEvent(
                node=outcome.dropped_at,
                kind=DROPPER,
                hop_index=hop,
                evidence=(("sent", sent), ("deadline", outcome.finished_tick)),
            )
        )
    for flag in outcome.delayed:
        found.append(
            DetectionEvent(
                node=flag.node,
                kind=DELAYER,
                hop_index=flag.hop_index,
                evidence=(("observed", flag.observed), ("expected", flag.expected)),
            )
        )
    return found


def classify(outcome: DeliveryOutcome) -> DetectionEvent | None:
    """Headline verdict for one delivery: the dropper, else the first delayer."""
    found = detection_events(outcome)
    return found[0] if found else None


def fallback_route(recorded: Sequence[Route], excluded: Iterable[NodeId]) -> Route:
    """Earliest recorded route that avoids every excluded node."""
    excluded = set(excluded)
    for route in recorded:
        if not excluded.intersection(route.hops):
            return route
    raise NoSafeRouteError(f"every recorded route passes through {sorted(excluded)}")
