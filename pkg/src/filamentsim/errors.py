"""Exception hierarchy shared by all modules."""


class FilamentError(Exception):
    """Base class for all errors raised by this package."""


class OutOfDomain(FilamentError):
    """Sample point lies outside the grid bounding box."""


class EmptyCurves(FilamentError):
    """An operation requiring at least one loop received an empty curve set."""


class DegenerateSegment(FilamentError):
    """A polyline segment is shorter than the degeneracy threshold."""


class UnknownScene(FilamentError):
    """Scene preset name is not recognized."""


class OnCurve(FilamentError):
    """Evaluation point coincides with the curve and nudging failed."""


class SingularJacobian(FilamentError):
    """The normal-plane Jacobian of the level set function is singular."""


class SingularEvaluation(FilamentError):
    """Velocity kernel evaluated on the curve with zero core thickness."""


class CflViolation(FilamentError):
    """Per-step displacement exceeds the narrow-band safety margin."""


class ZeroOnCorner(FilamentError):
    """A cell face corner carries an exactly-zero level set value."""


class NoRootInFace(FilamentError):
    """Bilinear zero search failed on a face reported as crossing."""


class OpenChain(FilamentError):
    """A curve chain failed to close during extraction."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class CurveOutsideGrid(FilamentError):
    """Curves do not fit in the grid with the required band clearance."""


class SchemaError(FilamentError):
    """Configuration document violates the schema."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
