class SliceAllocError(Exception):
    """Base class for everything raised by slicealloc."""


class InvalidTopology(SliceAllocError, ValueError):
    pass


class DisconnectedGraph(InvalidTopology):
    """Some ordered node pair has no path within the hop limit."""

    def __init__(self, source: int, target: int, max_hops: int):
        self.source = source
        self.target = target
        self.max_hops = max_hops
        super().__init__(
            f"no path from node {source} to node {target} within {max_hops} hops"
        )


class InvalidSliceRequest(SliceAllocError, ValueError):
    pass


class ModelError(SliceAllocError, ValueError):
    """A MILP model references unknown variables or is otherwise malformed."""


class ConfigError(SliceAllocError, ValueError):
    pass


class SolverUnavailable(ConfigError):
    """The requested solver back end can't be used in this environment."""


class SolverError(SliceAllocError):
    """A solver gave up for numerical reasons."""


class InvariantViolation(SliceAllocError):
    """
    A decoded solution breaks one of the model constraints.

    `tag` is the constraint family (C1 .. C10) so the message points at the
    part of the formulation that is wrong.
    """

    def __init__(self, tag: str, detail: str = ""):
        self.tag = tag
        self.detail = detail
        message = tag if not detail else f"{tag}: {detail}"
        super().__init__(message)


class InfeasibleAfterAdmission(SliceAllocError):
    """The admission loop accepted a set the hard problem can't place."""
