"""Exception hierarchy shared by all modules."""


class ThomJiggleError(Exception):
    """Base class for every error raised by this package."""


# --- simplicial core ---------------------------------------------------------

class DegenerateSimplex(ThomJiggleError):
    """A top simplex is geometrically degenerate (rank-deficient edge matrix)."""

    def __init__(self, simplex, message=None):
        self.simplex = tuple(simplex)
        super().__init__(message or f"degenerate simplex {self.simplex}")


class ImproperColoring(ThomJiggleError):
    """Two vertices of one simplex share a color."""


class DanglingVertexId(ThomJiggleError):
    """A simplex references a vertex id without coordinates."""


class UnknownSimplex(ThomJiggleError):
    """The requested simplex is not part of the complex."""


class DimensionMismatch(ThomJiggleError):
    """Ambient or simplex dimensions are inconsistent with the operation."""


class SizeLimitExceeded(ThomJiggleError):
    """A search was attempted on a complex above the configured size cap."""


# --- subdivision -------------------------------------------------------------

class TilingFailure(ThomJiggleError):
    """A pattern realization fails to tile; carries the violation certificate."""

    def __init__(self, message, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class InvalidParams(ThomJiggleError):
    """Pattern parameters outside their admissible range."""


class GluingConflict(ThomJiggleError):
    """Pattern applications disagree on a shared face (broken heredity)."""


class InvalidTime(ThomJiggleError):
    """Homotopy parameter outside [0, 1]."""


# --- jiggling ----------------------------------------------------------------

class UnsupportedDimension(ThomJiggleError):
    """Dimension outside the implemented range."""


class DiameterTooLarge(ThomJiggleError):
    """A simplex exceeds the injectivity-radius margin of the flat model."""


# --- transversality ----------------------------------------------------------

class DomainMismatch(ThomJiggleError):
    """Two plane fields live on incompatible domains."""


class OrderExhausted(ThomJiggleError):
    """The jiggling-order scan reached r_max without a passing certificate."""

    def __init__(self, message, best_margins=None):
        self.best_margins = best_margins or {}
        super().__init__(message)


# --- holonomy / cocycle ------------------------------------------------------

class DegenerateFiberForm(ThomJiggleError):
    """The 2-form restricts degenerately to a fiber."""


class LeftDomain(ThomJiggleError):
    """Holonomy transport exited the disk bundle."""


class StepUnderflow(ThomJiggleError):
    """The adaptive integrator hit the hard step floor."""


class QuadratureFailure(ThomJiggleError):
    """An integrand returned a non-finite value."""


# --- collapse / time jiggle --------------------------------------------------

class RejectionExhausted(ThomJiggleError):
    """No admissible jiggle vector found within the sample budget."""

    def __init__(self, message, worst_margins=None):
        self.worst_margins = worst_margins or {}
        super().__init__(message)


# --- serialization -----------------------------------------------------------

class SchemaViolation(ThomJiggleError):
    """A complex file does not conform to the documented schema."""
