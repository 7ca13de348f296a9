"""Exception types shared by the simulator modules."""


class SimulationError(Exception):
    """Base class for every sftpsim error."""


class DuplicateNodeError(SimulationError):
    """A node label appears more than once."""


class SelfLoopError(SimulationError):
    """An edge connects a node to itself."""


class DuplicateEdgeError(SimulationError):
    """The same node pair is listed twice in an edge list."""


class NonPositiveWeightError(SimulationError):
    """An edge weight is zero or negative."""


class InvalidThresholdError(SimulationError):
    """The radio-range threshold is below 1."""


class UnknownNodeError(SimulationError):
    """A node label does not exist in the graph."""


class NoRouteError(SimulationError):
    """The destination is unreachable from the source."""


class SameEndpointError(SimulationError):
    """Source and destination are the same node."""


class InvalidRouteError(SimulationError):
    """A route contains a hop pair that is not a link."""


class NoSafeRouteError(SimulationError):
    """Every recorded route passes through an excluded node."""


class ScenarioError(SimulationError):
    """A scenario file is malformed; `field` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
