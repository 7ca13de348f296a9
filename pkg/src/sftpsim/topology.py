"""Weighted MANET topology and the radio-coverage graph derived from it.

Link weights are small positive integers (abstract range units); a weight
of 0 means "no link". The same units double as propagation-delay ticks in
the routing layer, so everything downstream stays in exact integer
arithmetic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    DuplicateEdgeError,
    DuplicateNodeError,
    InvalidThresholdError,
    NonPositiveWeightError,
    SelfLoopError,
    UnknownNodeError,
)

NodeId = str


def label_sort_key(label: NodeId) -> str:
    """Canonical ordering key for node labels, used for every tie-break.

    Lowercase labels sort before uppercase ones (relay nodes "a".."z" come
    ahead of endpoint markers such as "S" and "D"), alphabetically within
    each group. Swapping case gives exactly that order under plain string
    comparison.
    """
    return label.swapcase()


@dataclass(frozen=True)
class WeightedAdjacency:
    """Symmetric matrix of link ranges with a zero diagonal.

    Row/column order follows the node declaration order of the scenario so
    text dumps diff positionally against reference tables.
    """

    labels: tuple[NodeId, ...]
    weights: tuple[tuple[int, ...], ...]
    _index: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: NodeId) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownNodeError(f"unknown node {label!r}") from None

    def has_node(self, label: NodeId) -> bool:
        return label in self._index

    def weight(self, u: NodeId, v: NodeId) -> int:
        return self.weights[self.index(u)][self.index(v)]

    def neighbors(self, u: NodeId) -> list[NodeId]:
        """Nodes linked to `u`, in canonical label order."""
        row = self.weights[self.index(u)]
        linked = [self.labels[j] for j, w in enumerate(row) if w > 0]
        linked.sort(key=label_sort_key)
        return linked

    def edges(self) -> list[tuple[NodeId, NodeId, int]]:
        """Undirected edge list in row-major declaration order."""
        out = []
        for i in range(self.n):
            for j in range(i + 1, self.n):
                w = self.weights[i][j]
                if w > 0:
                    out.append((self.labels[i], self.labels[j], w))
        return out


def build_adjacency(
    nodes: Sequence[NodeId],
    edges: Iterable[tuple[NodeId, NodeId, int]],
) -> WeightedAdjacency:
    """Build the symmetric range matrix from a node list and weighted edges.

    Listing edge (u, v, w) sets both directions to w.

    Raises:
        DuplicateNodeError: a label appears twice in `nodes`.
        UnknownNodeError: an edge references a label not in `nodes`.
        SelfLoopError: an edge connects a node to itself.
        DuplicateEdgeError: the same pair appears twice, with any weights.
        NonPositiveWeightError: a weight is not a positive integer.
    """
    labels = tuple(nodes)
    index: dict[NodeId, int] = {}
    for lab in labels:
        if not isinstance(lab, str) or not lab or lab.split() != [lab]:
            raise ValueError(f"node labels must be non-empty and whitespace-free, got {lab!r}")
        if lab in index:
            raise DuplicateNodeError(f"node {lab!r} listed twice")
        index[lab] = len(index)

    grid = [[0] * len(labels) for _ in labels]
    seen: set[tuple[NodeId, NodeId]] = set()
    for u, v, w in edges:
        if u not in index or v not in index:
            missing = u if u not in index else v
            raise UnknownNodeError(f"edge references unknown node {missing!r}")
        if u == v:
            raise SelfLoopError(f"self loop on {u!r}")
        if not isinstance(w, int) or isinstance(w, bool) or w <= 0:
            raise NonPositiveWeightError(f"edge {u}-{v} weight must be a positive integer, got {w!r}")
        pair = (u, v) if index[u] < index[v] else (v, u)
        if pair in seen:
            raise DuplicateEdgeError(f"edge {pair[0]}-{pair[1]} listed twice")
        seen.add(pair)
        grid[index[u]][index[v]] = w
        grid[index[v]][index[u]] = w
    return WeightedAdjacency(labels, tuple(tuple(row) for row in grid))


@dataclass(frozen=True)
class CoverageGraph:
    """Adjacency restricted to links inside radio range (weight < threshold)."""

    base: WeightedAdjacency
    threshold: int

    def __post_init__(self):
        if self.threshold < 1:
            raise InvalidThresholdError(f"threshold must be >= 1, got {self.threshold}")
        for row in self.base.weights:
            for w in row:
                if w >= self.threshold:
                    raise ValueError(f"weight {w} is outside the coverage threshold {self.threshold}")

    @property
    def labels(self) -> tuple[NodeId, ...]:
        return self.base.labels

    def has_node(self, label: NodeId) -> bool:
        return self.base.has_node(label)

    def weight(self, u: NodeId, v: NodeId) -> int:
        return self.base.weight(u, v)

    def neighbors(self, u: NodeId) -> list[NodeId]:
        return self.base.neighbors(u)

    def edges(self) -> list[tuple[NodeId, NodeId, int]]:
        return self.base.edges()


def apply_threshold(adj: WeightedAdjacency, threshold: int) -> CoverageGraph:
    """Drop every link whose range reaches or exceeds the radio threshold.

    Links with weight < threshold survive unchanged; anything at or above
    the threshold is out of Wi-Fi range and removed.
    """
    if threshold < 1:
        raise InvalidThresholdError(f"threshold must be >= 1, got {threshold}")
    kept = tuple(tuple(w if w < threshold else 0 for w in row) for row in adj.weights)
    return CoverageGraph(WeightedAdjacency(adj.labels, kept), threshold)


def degree(g: CoverageGraph, u: NodeId) -> int:
    """Number of live links on `u`'s row (its communication-link count)."""
    row = g.base.weights[g.base.index(u)]
    return sum(1 for w in row if w > 0)


def connected_components(g: CoverageGraph) -> list[list[NodeId]]:
    """Partition the nodes into connected components.

    Components are listed by first appearance in declaration order, and
    each component lists its members in declaration order.
    """
    seen: set[NodeId] = set()
    parts: list[list[NodeId]] = []
    for start in g.labels:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nb in g.neighbors(node):
                if nb not in comp:
                    comp.add(nb)
                    stack.append(nb)
        seen |= comp
        parts.append([lab for lab in g.labels if lab in comp])
    return parts


def component_of(g: CoverageGraph, u: NodeId) -> set[NodeId]:
    """Set of nodes reachable from `u` (including `u`)."""
    g.base.index(u)
    comp = {u}
    stack = [u]
    while stack:
        node = stack.pop()
        for nb in g.neighbors(node):
            if nb not in comp:
                comp.add(nb)
                stack.append(nb)
    return comp


def shortest_distances(g: CoverageGraph, source: NodeId) -> dict[NodeId, int]:
    """Weighted shortest-path distance in ticks from `source` to each reachable node."""
    g.base.index(source)
    dist: dict[NodeId, int] = {source: 0}
    heap: list[tuple[int, str, NodeId]] = [(0, label_sort_key(source), source)]
    while heap:
        d, _, node = heapq.heappop(heap)
        if d > dist.get(node, d):
            continue
        for nb in g.neighbors(node):
            cand = d + g.weight(node, nb)
            if cand < dist.get(nb, cand + 1):
                dist[nb] = cand
                heapq.heappush(heap, (cand, label_sort_key(nb), nb))
    return dist
