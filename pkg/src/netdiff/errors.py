"""Exception hierarchy.

Every error raised by this package derives from :class:`NetdiffError`, so
callers can catch one base class.  Errors that indicate bad *inputs* (rather
than a computation that failed on valid inputs) additionally derive from
:class:`ValidationError`; the CLI maps the former to exit code 2 and the
latter to exit code 1.
"""


class NetdiffError(Exception):
    """Base class for all package errors."""


class ValidationError(NetdiffError):
    """Base class for input-validation errors (CLI exit code 2)."""


class NodeIndexError(ValidationError, IndexError):
    """A node id falls outside [0, n)."""


class SelfLoopError(ValidationError, ValueError):
    """An edge has target == source."""


class InvalidProbabilityError(ValidationError, ValueError):
    """A requested edge probability falls outside [0, 1]."""


class InvalidSizeError(ValidationError, ValueError):
    """A graph size is incompatible with the generator's seed graph."""


class LengthMismatchError(ValidationError, ValueError):
    """A vector's length does not match the graph's node count."""


class DimensionMismatchError(ValidationError, ValueError):
    """Array shapes are inconsistent."""


class NonFiniteError(ValidationError, ValueError):
    """An input array contains NaN or infinity."""


class InvalidAlphaError(ValidationError, ValueError):
    """A confidence level alpha falls outside (0, 1)."""


class SchemaError(ValidationError, ValueError):
    """An input file does not match the expected column schema."""


class OrphanNodeError(ValidationError, ValueError):
    """An edge references a node id absent from the panel files."""


class EmptyPanelError(ValidationError, ValueError):
    """No complete node rows remain after applying the missing-data policy."""


class DegenerateWeightsError(NetdiffError):
    """All period-0 success probabilities are 0 or 1; weights are undefined."""


class SingularError(NetdiffError):
    """The Hessian is numerically singular; no interior maximizer found."""


class NotConvergedError(NetdiffError):
    """An iterative fit hit its iteration cap before meeting tolerance.

    Carries the last iterate and diagnostics so callers can inspect it.
    """

    def __init__(self, message, coefficients=None, diagnostics=None):
        super().__init__(message)
        self.coefficients = coefficients
        self.diagnostics = diagnostics or {}


class EmptySubsetError(NetdiffError):
    """The fitting subset (e.g. nodes with y0 == 0) is empty."""


class MissingDrawsError(NetdiffError):
    """Simulation draws are required but absent from the fitted means."""


class DegenerateV2Error(NetdiffError):
    """The estimated aggregate period-0 outcome variance is numerically zero."""


class DegenerateVarianceError(NetdiffError):
    """Both the pair-sum variance and its diagonal fallback are degenerate."""
