"""Exception types shared across the package."""


class RamulusError(Exception):
    """Base class for all package errors."""


class DomainError(RamulusError, ValueError):
    """Input violates a documented precondition or invariant."""


class PreconditionError(DomainError):
    """A geometric precondition (disjointness, support membership) fails."""


class CapacityError(RamulusError):
    """Instance exceeds a configured size cap (atom count, enumeration size)."""


class InfeasibleAngleError(DomainError):
    """Branching-angle cosines leave [-1, 1]: the Y junction is not locally optimal."""


class DecompositionError(DomainError):
    """A chain cannot be decomposed into source-to-sink paths without cancellation."""
