import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from sftpsim import apply_threshold, build_adjacency

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

# 15-node demo network used throughout: relays a..m plus endpoints S and D
DEMO_NODES = list("abcdefghijklm") + ["S", "D"]
DEMO_EDGES = [
    ("a", "c", 1), ("a", "S", 1),
    ("b", "c", 2), ("b", "e", 2),
    ("c", "d", 2), ("c", "f", 2),
    ("d", "g", 2),
    ("e", "f", 2), ("e", "h", 3),
    ("f", "g", 2),
    ("g", "i", 1),
    ("h", "D", 3),
    ("i", "D", 1),
    ("j", "k", 4),
    ("k", "l", 1), ("k", "D", 4),
    ("l", "m", 3),
]
DEMO_THRESHOLD = 4
# edges surviving the threshold (weight < 4)
DEMO_COVERAGE_EDGES = [e for e in DEMO_EDGES if e[2] < DEMO_THRESHOLD]


@pytest.fixture
def demo_adjacency():
    return build_adjacency(DEMO_NODES, DEMO_EDGES)


@pytest.fixture
def demo_coverage(demo_adjacency):
    return apply_threshold(demo_adjacency, DEMO_THRESHOLD)


def random_connected_edges(rng, labels, weight_hi=4, extra=2):
    """Random connected graph: a random spanning tree plus `extra` edges."""
    order = list(labels)
    rng.shuffle(order)
    edges = {}
    for i in range(1, len(order)):
        u, v = order[i], order[rng.randrange(i)]
        key = (u, v) if u < v else (v, u)
        edges[key] = rng.randint(1, weight_hi)
    for _ in range(extra):
        u, v = rng.sample(order, 2)
        key = (u, v) if u < v else (v, u)
        if key not in edges:
            edges[key] = rng.randint(1, weight_hi)
    return [(u, v, w) for (u, v), w in sorted(edges.items())]
