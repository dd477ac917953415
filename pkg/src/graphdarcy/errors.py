"""Exception taxonomy for the whole toolkit.

Split into input/usage errors (CLI exit code 1) and validation/verification
failures (exit code 2) so the command front end can map them mechanically.
"""


class GraphDarcyError(Exception):
    """Base class for all toolkit errors."""


class InputError(GraphDarcyError):
    """Bad input or usage; maps to CLI exit code 1."""


class ValidationError(GraphDarcyError):
    """A checked mathematical condition failed; maps to CLI exit code 2."""


# --- plane_graph ---------------------------------------------------------

class NotSimple(InputError):
    pass


class NotConnected(InputError):
    pass


class EdgeCrossing(InputError):
    def __init__(self, edge_a, edge_b):
        self.edge_a = tuple(edge_a)
        self.edge_b = tuple(edge_b)
        super().__init__(f"edges {self.edge_a} and {self.edge_b} cross")


class DuplicateCoordinate(InputError):
    pass


class IsomorphismTimeout(GraphDarcyError):
    pass


class InternalCycle(GraphDarcyError):
    """Bridge-component graph came out cyclic; indicates a bug."""


# --- map_builder ---------------------------------------------------------

class DegenerateGeometry(InputError):
    pass


class EpsilonTooLarge(InputError):
    pass


class UnionFailure(GraphDarcyError):
    pass


class HasBridge(InputError):
    pass


class TooSmall(InputError):
    pass


class UnsupportedFace(InputError):
    """Inner face has an empty kernel, or the component is pinched at a cut
    vertex; the corner-quad construction cannot tile it."""


class NotBipartite(ValidationError):
    pass


class ValidationFailed(ValidationError):
    def __init__(self, report):
        self.report = report
        super().__init__("map validation failed: " + report.summary())


class CorridorBlocked(GraphDarcyError):
    pass


# --- mesh ----------------------------------------------------------------

class QualityFailure(ValidationError):
    pass


# --- expr ----------------------------------------------------------------

class ExpressionSyntaxError(InputError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class UnknownIdentifier(InputError):
    def __init__(self, name, offset):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier '{name}' (at byte {offset})")


class DomainError(GraphDarcyError):
    pass


# --- darcy_mixed ---------------------------------------------------------

class EmptyColorClass(ValidationError):
    pass


class NonPositiveA(ValidationError):
    pass


class AllZeroBeta(ValidationError):
    pass


class QuadratureDomainError(ValidationError):
    pass


class SingularSystem(GraphDarcyError):
    pass


class ResidualTooLarge(GraphDarcyError):
    pass


class SingularNeumann(GraphDarcyError):
    pass


# --- verify --------------------------------------------------------------

class TooLarge(InputError):
    pass


class UnknownCase(InputError):
    pass
