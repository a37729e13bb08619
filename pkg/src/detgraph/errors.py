"""Exception types shared by all detgraph modules."""


class InvalidArgument(ValueError):
    """A precondition on an operation's inputs was violated."""


class CapacityExceeded(RuntimeError):
    """An input is larger than the documented exact-computation bound."""


class NumericalFailure(RuntimeError):
    """An internal numerical self-check failed beyond its tolerance."""


class InvalidState(RuntimeError):
    """An operation was applied to inputs in a state it does not accept
    (e.g. a domination-only computation on a non-dominated pair)."""
