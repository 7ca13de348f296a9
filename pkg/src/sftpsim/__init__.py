"""Deterministic discrete-event simulator for secure fault-tolerant MANET
routing: coverage-area thresholding, ping-based repair of failed nodes, and
source-routed discovery that detects and routes around packet droppers."""

from .errors import (
    DuplicateEdgeError,
    DuplicateNodeError,
    InvalidRouteError,
    InvalidThresholdError,
    NonPositiveWeightError,
    NoRouteError,
    NoSafeRouteError,
    SameEndpointError,
    ScenarioError,
    SelfLoopError,
    SimulationError,
    UnknownNodeError,
)
from .fault_tolerance import (
    ACTIVE,
    INACTIVE,
    ConnectionEntry,
    ConnectionTable,
    NodeStatus,
    build_connection_table,
    ping_sweep,
    repair_failure,
)
from .routing import (
    DataPacket,
    DelayFlag,
    DeliveryOutcome,
    DetectionEvent,
    Discovery,
    FloodEvent,
    FloodTrace,
    Route,
    RouteReply,
    RouteRequest,
    classify,
    deliver_data,
    detection_events,
    discover_route,
    fallback_route,
    make_route,
)
from .scheduler import EventQueue, SimEvent
from .simulator import (
    Metrics,
    PacketResult,
    Report,
    Scenario,
    compute_metrics,
    load_scenario,
    prepare_network,
    report_to_dict,
    report_to_json,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .topology import (
    CoverageGraph,
    WeightedAdjacency,
    apply_threshold,
    build_adjacency,
    connected_components,
    degree,
    label_sort_key,
)

__version__ = "0.1.0"
