"""Exception types shared by all topoplasma modules."""


class TopoplasmaError(Exception):
    """Base class for all library errors."""


class InvalidParameter(TopoplasmaError):
    """Input violates a documented precondition (non-finite, wrong shape, ...)."""


class NotApplicable(TopoplasmaError):
    """Operation is undefined for this parameter regime (e.g. k_z != 0 for TM/TE)."""


class NumericalFailure(TopoplasmaError):
    """A solver did not converge or a gauge obstruction was hit."""


class ResolutionError(TopoplasmaError):
    """Grid too coarse to resolve the requested feature (branch jump, oscillation)."""
