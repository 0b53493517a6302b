"""Exception types raised across the package."""


class AuxGuideError(Exception):
    """Base class for all package errors."""


class NonConvergence(AuxGuideError):
    pass


class DegenerateFraming(AuxGuideError):
    pass


class NotSymmetric(AuxGuideError):
    pass


class NegativeEigenvalue(AuxGuideError):
    pass


class DegenerateInput(AuxGuideError):
    pass


class LengthMismatch(AuxGuideError):
    pass


class TooShort(AuxGuideError):
    pass


class ShapeMismatch(AuxGuideError):
    pass


class RankDeficient(AuxGuideError):
    pass


class DimMismatch(AuxGuideError):
    pass


class TooFewPoints(AuxGuideError):
    pass


class Divergence(AuxGuideError):
    """Training loss became non-finite."""


class ConfigError(AuxGuideError):
    pass
