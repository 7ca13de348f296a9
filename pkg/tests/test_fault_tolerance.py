import random

import pytest

from sftpsim import (
    ACTIVE,
    INACTIVE,
    UnknownNodeError,
    apply_threshold,
    build_adjacency,
    build_connection_table,
    degree,
    ping_sweep,
    repair_failure,
)
from sftpsim.scheduler import PING_REQ, PING_RESP, TIMEOUT

from conftest import DEMO_COVERAGE_EDGES, DEMO_NODES, random_connected_edges
from oracles import reachable

# links/priority ranking of the demo coverage graph under the tie-break rule
DEMO_TABLE = [
    ("c", 4, 1), ("e", 3, 2), ("f", 3, 3), ("g", 3, 4),
    ("a", 2, 5), ("b", 2, 6), ("d", 2, 7), ("h", 2, 8),
    ("i", 2, 9), ("D", 2, 10), ("S", 1, 11),
]


def test_ping_sweep_all_active(demo_coverage):
    statuses = ping_sweep(demo_coverage, "S", set())
    assert len(statuses) == 11
    assert all(st.state == ACTIVE for st in statuses)
    assert [st.node for st in statuses] == ["a", "b", "c", "d", "e", "f", "g", "h", "i", "S", "D"]


def test_ping_sweep_failed_node(demo_coverage):
    statuses = ping_sweep(demo_coverage, "S", {"e"})
    states = {st.node: st.state for st in statuses}
    assert states.pop("e") == INACTIVE
    assert all(state == ACTIVE for state in states.values())
    assert len(states) == 10


def test_ping_sweep_empty_graph():
    empty = apply_threshold(build_adjacency([], []), 4)
    assert ping_sweep(empty, "S", set()) == []


def test_ping_sweep_rejects_unknown_failed(demo_coverage):
    with pytest.raises(UnknownNodeError):
        ping_sweep(demo_coverage, "S", {"zz"})


def test_ping_sweep_logs_request_and_answer(demo_coverage):
    log = []
    ping_sweep(demo_coverage, "S", {"e"}, log=log)
    requests = [ev.payload["node"] for ev in log if ev.kind == PING_REQ]
    responses = [ev.payload["node"] for ev in log if ev.kind == PING_RESP]
    timeouts = [ev.payload["node"] for ev in log if ev.kind == TIMEOUT]
    assert sorted(requests) == sorted(["a", "b", "c", "d", "e", "f", "g", "h", "i", "S", "D"])
    assert timeouts == ["e"]
    assert "e" not in responses and len(responses) == 10
    ticks = [ev.tick for ev in log]
    assert ticks == sorted(ticks)


def test_connection_table_demo(demo_coverage):
    statuses = ping_sweep(demo_coverage, "S", set())
    table = build_connection_table(demo_coverage, [st.node for st in statuses])
    assert [(e.node, e.links, e.priority) for e in table] == DEMO_TABLE


def test_connection_table_single_node():
    cov = apply_threshold(build_adjacency(["x"], []), 4)
    table = build_connection_table(cov, ["x"])
    assert [(e.node, e.links, e.priority) for e in table] == [("x", 0, 1)]


def test_connection_table_rejects_empty_active(demo_coverage):
    with pytest.raises(ValueError):
        build_connection_table(demo_coverage, [])


def test_connection_table_properties_random():
    rng = random.Random(77)
    labels = list("abcdefgh") + ["S", "D"]
    for _ in range(100):
        n = rng.randint(1, len(labels))
        chosen = rng.sample(labels, n)
        edges = random_connected_edges(rng, chosen, extra=rng.randint(0, 3)) if n > 1 else []
        cov = apply_threshold(build_adjacency(chosen, edges), 5)
        table = build_connection_table(cov, chosen)
        assert sorted(e.priority for e in table) == list(range(1, n + 1))
        ordered = sorted(table, key=lambda e: e.priority)
        for prev, cur in zip(ordered, ordered[1:]):
            assert prev.links >= cur.links
            if prev.links == cur.links:
                assert prev.node.swapcase() < cur.node.swapcase()
        for entry in table:
            assert entry.links == degree(cov, entry.node)


def test_repair_demo_failure(demo_coverage):
    statuses = ping_sweep(demo_coverage, "S", set())
    table = build_connection_table(demo_coverage, [st.node for st in statuses])
    repaired = repair_failure(demo_coverage, table, "e")
    # e is fully detached
    assert all(repaired.weight("e", other) == 0 for other in repaired.labels if other != "e")
    # neighbors chained in priority order f, b, h with capped-sum weights
    assert repaired.weight("f", "b") == 3
    assert repaired.weight("b", "h") == 3
    assert repaired.weight("f", "h") == 0
    # previously existing links untouched
    assert repaired.weight("b", "c") == 2
    # the input graph is unchanged
    assert demo_coverage.weight("e", "b") == 2
    # former neighbors stay mutually reachable
    reach = reachable(list(repaired.labels), repaired.edges(), "b")
    assert {"f", "h"} <= reach


def test_repair_failure_without_neighbors():
    cov = apply_threshold(build_adjacency(["x", "y", "z"], [("x", "y", 1)]), 4)
    table = build_connection_table(cov, ["x", "y", "z"])
    repaired = repair_failure(cov, table, "z")
    assert repaired.base.weights == cov.base.weights


def test_repair_failure_single_neighbor():
    cov = apply_threshold(build_adjacency(["x", "y"], [("x", "y", 1)]), 4)
    table = build_connection_table(cov, ["x", "y"])
    repaired = repair_failure(cov, table, "y")
    assert repaired.base.weights == ((0, 0), (0, 0))


def test_repair_rejects_unknown_node(demo_coverage):
    table = build_connection_table(demo_coverage, ["a"])
    with pytest.raises(UnknownNodeError):
        repair_failure(demo_coverage, table, "zz")


def test_repair_properties_random():
    rng = random.Random(4242)
    labels = list("abcdefgh")
    for _ in range(150):
        n = rng.randint(3, len(labels))
        chosen = labels[:n]
        edges = random_connected_edges(rng, chosen, extra=rng.randint(0, 3))
        threshold = 5
        cov = apply_threshold(build_adjacency(chosen, edges), threshold)
        failed = rng.choice(chosen)
        neighbors = cov.neighbors(failed)
        table = build_connection_table(cov, [lab for lab in chosen if lab != failed])

        repaired = repair_failure(cov, table, failed)
        assert repair_failure(cov, table, failed).base.weights == repaired.base.weights

        for row in repaired.base.weights:
            for w in row:
                assert w < threshold
        if neighbors:
            reach = reachable(list(repaired.labels), repaired.edges(), neighbors[0])
            assert set(neighbors) <= reach
