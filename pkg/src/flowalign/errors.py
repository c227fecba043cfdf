"""Exception hierarchy shared across the package."""

from __future__ import annotations


class FlowAlignError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(FlowAlignError):
    """An argument violates a documented precondition."""


class NotEnabledError(InvalidInputError):
    """A transition was fired at a marking that does not enable it."""

    def __init__(self, transition: str, deficient_places: list[str]):
        self.transition = transition
        self.deficient_places = list(deficient_places)
        super().__init__(
            f"transition {transition!r} is not enabled; "
            f"deficient places: {', '.join(deficient_places) or '(none)'}"
        )


class InvalidSpecError(InvalidInputError):
    """A configuration object (noise spec, generator spec, ...) is unusable."""


class InvalidLimitsError(InvalidInputError):
    """Exploration limits reject the instance before any search starts."""


class ModelParseError(FlowAlignError):
    """A model or log file could not be read (malformed input)."""


class SemanticError(ModelParseError):
    """Well-formed input with inconsistent content (dangling ids, no marking)."""


class UnreachableFinalError(FlowAlignError):
    """The final marking is absent from a constructed reachability graph.

    ``reason`` distinguishes a graph cut short by resource limits
    (``"truncated"``), one that lost branches to the per-place token cap
    (``"token_cap"``), and one where the final marking is genuinely
    unreachable (``"unreachable"``).
    """

    def __init__(self, reason: str, message: str):
        self.reason = reason
        super().__init__(message)


class InfeasibleError(FlowAlignError):
    """No initial-to-final path exists in the flow problem."""


class InternalInvariantError(FlowAlignError):
    """A contract the implementation guarantees was observed broken."""
