"""Exception hierarchy shared across the library."""


class RigidCoverageError(Exception):
    """Base class for all library errors."""


# -- geometry / rigidity -----------------------------------------------------

class CoincidentPoints(RigidCoverageError):
    """Two points are too close for a bearing to exist."""


class DegenerateConfiguration(RigidCoverageError):
    """Configuration collapses (all points coincide, zero scale direction)."""


class InvalidAnchor(RigidCoverageError):
    """Anchor vertices for a growth operation are invalid."""


class MissingEdge(RigidCoverageError):
    """Referenced edge is not present in the graph."""


class DegeneratePolygon(RigidCoverageError):
    """Polygon violates convexity / orientation / area requirements."""


class ZeroArea(RigidCoverageError):
    """Centroid requested for a polygon without positive area."""


# -- network construction ----------------------------------------------------

class OutOfRange(RigidCoverageError):
    """State of charge outside [0, 1]."""


class InsufficientLevelOne(RigidCoverageError):
    """Fewer than two robots at the top energy level."""


class NoFeasibleAnchors(RigidCoverageError):
    """No anchor pair satisfies the level-sandwich constraint."""


class RigidityFailure(RigidCoverageError):
    """Constructed framework is not rigid even after jitter retries."""


# -- reconfiguration ---------------------------------------------------------

class IrreversibleDegree(RigidCoverageError):
    """Departing vertex has too many edges for a reverse growth operation."""


class RepairFailed(RigidCoverageError):
    """Local repair could not restore minimal rigidity."""


class RepairImpossible(RigidCoverageError):
    """No edge additions can restore rigidity (degenerate configuration)."""


# -- energy automaton --------------------------------------------------------

class EnergyExhausted(RigidCoverageError):
    """State of charge dropped below zero; runtime invariant violated."""


class StalePlan(RigidCoverageError):
    """Cached return plan no longer matches the robot state."""


class PlanExhausted(RigidCoverageError):
    """Requested input index beyond the end of the plan."""


# -- planner / solver --------------------------------------------------------

class Unreachable(RigidCoverageError):
    """No feasible return trajectory within the step budget."""


class SolverFailure(RigidCoverageError):
    """QP solver exceeded its iteration budget inside a feasibility probe."""


class MaxIterations(RigidCoverageError):
    """Solver hit the iteration limit; best iterate may be attached."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class Infeasible(RigidCoverageError):
    """Constraint system of the optimization problem is inconsistent."""


class ModelUnsupported(RigidCoverageError):
    """Robot model kind not handled by this operation."""


# -- harness -----------------------------------------------------------------

class ConfigError(RigidCoverageError):
    """Scenario configuration is malformed or inconsistent."""
