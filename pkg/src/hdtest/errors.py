"""Exception hierarchy shared by every module."""


class HDTestError(ValueError):
    pass


class TooFewObservations(HDTestError):
    pass


class NonFiniteData(HDTestError):
    pass


class EigenFailure(HDTestError):
    pass


class DegenerateEigenvalue(HDTestError):
    pass


class DegenerateDiagonal(HDTestError):
    pass


class DimensionMismatch(HDTestError):
    pass


class OracleRequired(HDTestError):
    pass


class NonPositiveVariance(HDTestError):
    pass


class BadDimension(HDTestError):
    pass


class BadFamilyParams(HDTestError):
    pass
