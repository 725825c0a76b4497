"""Exception hierarchy shared by all modules."""


class ZhyvotError(ValueError):
    """Base class for library errors."""


class StructuralError(ZhyvotError):
    """Dangling references, duplicate ids, malformed graph data."""


class ZhyvotAxiomError(ZhyvotError):
    """A graph fails one of the zhyvot conditions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CompositionError(ZhyvotError):
    """A sequence of edges is not a path."""


class DepthError(ZhyvotError):
    """The truncated expansion is too shallow for the requested quantity."""


class ResourceLimitError(ZhyvotError):
    """An enumeration exceeded its configured bound."""


class DisconnectedError(ZhyvotError):
    """An operation that needs a connected core got several components."""

    def __init__(self, components):
        self.components = components
        super().__init__(
            "core is disconnected: " + "; ".join("{" + ", ".join(c) + "}" for c in components)
        )


class InfeasibleError(ZhyvotError):
    """No weight or construction with the requested properties exists."""


class OutOfClosedFormError(ZhyvotError):
    """A trace query lies outside the regime with a known closed form."""


class AmbiguousPairingError(ZhyvotError):
    """Several integers k explain the same pairing value."""

    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = candidates


class InconsistentPairingError(ZhyvotError):
    """No integer k explains a pairing value."""
