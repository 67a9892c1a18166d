"""Exception types shared across the library."""


class GafsimError(Exception):
    """Base class for all library-specific errors."""


class QuadratureFailure(GafsimError):
    """An adaptive quadrature could not reach the requested tolerance
    within its node budget."""


class NoBracket(GafsimError):
    """The disc-mass function never reaches 1 inside the search window,
    which signals a degenerate weight (e.g. density identically zero
    near the probed point)."""


class UnsupportedWeightOperation(GafsimError):
    """The requested operation is undefined for this weight kind."""


class DivisionByZeroMass(GafsimError):
    """A probed disc carries zero mass, so a mass ratio is undefined."""

    def __init__(self, point, radius):
        self.point = point
        self.radius = radius
        super().__init__("zero mass in disc at %r, radius %g" % (point, radius))


class TruncationBudgetExceeded(GafsimError):
    """Certifying the series truncation would need more terms than the
    configured cap allows."""


class OutOfCertifiedDomain(GafsimError):
    """A kernel or sample was evaluated outside the disc its truncation
    certificate covers."""


class CoverageFailure(GafsimError):
    """Densification of a sampling sequence did not converge; the
    separation parameter is too large relative to the covering radius."""


class RegionNotPadded(GafsimError):
    """The experiment region extends beyond the padded window the
    sampling sequence was generated on."""


class UnboundedDensity(GafsimError):
    """The density has no finite supremum on the requested region."""


class BoundaryZeroSuspected(GafsimError):
    """Repeated jitter retries failed; a zero appears to sit on the
    integration circle."""


class NewtonDivergence(GafsimError):
    """Newton refinement failed to converge inside a subdivision cell."""


class SupportEscapesRegion(GafsimError):
    """The test function's support is not contained in the zero-set
    region."""


class InsufficientHoles(GafsimError):
    """Too few hole events were observed to include a scaling point in
    the fit."""


class InsufficientDeviations(GafsimError):
    """Too few deviation events were observed to include a scaling point
    in the fit."""


class NotLocallyFlat(GafsimError):
    """The weight failed the local-flatness diagnostic required by the
    asymptotic-normality experiment."""


class ConfigError(GafsimError):
    """Invalid experiment configuration; names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__("config field '%s': %s" % (field, message))
