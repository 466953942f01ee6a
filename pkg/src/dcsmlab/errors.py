"""Exception types shared across the package."""


class DcsmLabError(Exception):
    """Base class for all package errors."""


class ZeroVector(DcsmLabError):
    pass


class DimensionMismatch(DcsmLabError):
    pass


class DimensionTooSmall(DcsmLabError):
    pass


class DegenerateObjective(DcsmLabError):
    pass


class DegenerateSum(DcsmLabError):
    pass


class ConfigInvalid(DcsmLabError):
    pass


class Ungrammatical(DcsmLabError):
    pass


class UnknownToken(DcsmLabError):
    pass


class NoRealRoot(DcsmLabError):
    pass


class RequiresSimplex(DcsmLabError):
    pass


class GridOverflow(DcsmLabError):
    pass


class MissingClause(DcsmLabError):
    pass


class BetaConstraintViolated(DcsmLabError):
    pass


class MissingFrEntry(DcsmLabError):
    pass


class ZeroVariance(DcsmLabError):
    pass


class ShapeMismatch(DcsmLabError):
    pass


class NonFiniteGradient(DcsmLabError):
    pass


class EmptyDataset(DcsmLabError):
    pass


class WorldTooSmall(DcsmLabError):
    pass


class MissingArtifact(DcsmLabError):
    pass
