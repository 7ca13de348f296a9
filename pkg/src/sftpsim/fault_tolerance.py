"""Ping-based liveness sweep, priority-ranked connection table, and repair
of the coverage graph around a failed node."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from . import scheduler
from .errors import UnknownNodeError
from .scheduler import EventQueue, SimEvent
from .topology import (
    CoverageGraph,
    NodeId,
    WeightedAdjacency,
    component_of,
    degree,
    label_sort_key,
    shortest_distances,
)

ACTIVE = "active"
INACTIVE = "inactive"

# extra ticks past a full round trip before a ping is declared lost
PING_GRACE = 1


@dataclass(frozen=True)
class NodeStatus:
    node: NodeId
    state: str  # ACTIVE or INACTIVE


@dataclass(frozen=True)
class ConnectionEntry:
    node: NodeId
    links: int
    priority: int


@dataclass(frozen=True)
class ConnectionTable:
    """Nodes ranked by communication-link count; priority 1 is the highest.

    Entries are ordered by priority. Priorities are the permutation 1..n,
    never decrease as link counts drop, and equal link counts are ordered
    by ascending canonical label.
    """

    entries: tuple[ConnectionEntry, ...]

    def __post_init__(self):
        priorities = sorted(e.priority for e in self.entries)
        if priorities != list(range(1, len(self.entries) + 1)):
            raise ValueError("priorities must form the permutation 1..n")
        ordered = sorted(self.entries, key=lambda e: e.priority)
        for prev, cur in zip(ordered, ordered[1:]):
            if prev.links < cur.links:
                raise ValueError("priority order must follow descending link counts")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def priority_of(self, node: NodeId) -> int | None:
        for entry in self.entries:
            if entry.node == node:
                return entry.priority
        return None


def ping_sweep(
    g: CoverageGraph,
    source: NodeId,
    failed: Iterable[NodeId],
    log: list[SimEvent] | None = None,
) -> list[NodeStatus]:
    """Probe liveness of every node in the source's network.

    A ping request and its response (or a timeout for a failed node) run
    through the event queue per node; pass `log` to capture those events.
    Nodes in `failed` come back inactive, every other node reachable from
    `source` comes back active. Statuses are listed in declaration order.
    """
    failed = set(failed)
    for node in failed:
        if not g.has_node(node):
            raise UnknownNodeError(f"failed set references unknown node {node!r}")
    if g.base.n == 0:
        return []

    comp = component_of(g, source)
    dist = shortest_distances(g, source)
    queue = EventQueue()
    swept = [lab for lab in g.labels if lab in comp or lab in failed]
    for node in swept:
        d = dist.get(node, 0)
        queue.schedule(d, scheduler.PING_REQ, node=node)
        if node in failed:
            queue.schedule(2 * d + PING_GRACE, scheduler.TIMEOUT, node=node)
        else:
            queue.schedule(2 * d, scheduler.PING_RESP, node=node)
    while len(queue):
        event = queue.pop()
        if log is not None:
            log.append(event)
    return [NodeStatus(node, INACTIVE if node in failed else ACTIVE) for node in swept]


def build_connection_table(g: CoverageGraph, active: Iterable[NodeId]) -> ConnectionTable:
    """Rank the active nodes by descending link count, ties by label.

    Priorities 1..n are assigned in that order.
    """
    active = list(active)
    if not active:
        raise ValueError("active set is empty")
    for node in active:
        if not g.has_node(node):
            raise UnknownNodeError(f"active set references unknown node {node!r}")
    ranked = sorted(active, key=lambda n: (-degree(g, n), label_sort_key(n)))
    entries = tuple(
        ConnectionEntry(node, degree(g, node), rank) for rank, node in enumerate(ranked, start=1)
    )
    return ConnectionTable(entries)


def repair_failure(g: CoverageGraph, table: ConnectionTable, failed: NodeId) -> CoverageGraph:
    """Detach a failed node and re-join its neighbors in priority order.

    The failed node keeps its slot in the matrix but loses every edge. Its
    former neighbors, ordered by ascending priority number, are chained:
    each consecutive pair gets a new edge unless one already exists. A new
    edge weighs the sum of the two removed edge weights, capped at
    threshold - 1 so it stays inside radio range. Returns a new graph; the
    input is untouched.
    """
    fi = g.base.index(failed)
    neighbors = g.neighbors(failed)
    neighbors.sort(key=lambda n: (table.priority_of(n) or float("inf"), label_sort_key(n)))

    grid = [list(row) for row in g.base.weights]
    for j in range(g.base.n):
        grid[fi][j] = 0
        grid[j][fi] = 0
    for u, v in zip(neighbors, neighbors[1:]):
        ui, vi = g.base.index(u), g.base.index(v)
        if grid[ui][vi] == 0:
            w = min(g.weight(u, failed) + g.weight(failed, v), g.threshold - 1)
            grid[ui][vi] = w
            grid[vi][ui] = w
    repaired = WeightedAdjacency(g.labels, tuple(tuple(row) for row in grid))
    return CoverageGraph(repaired, g.threshold)
