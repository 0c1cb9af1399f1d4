"""Exception hierarchy shared by all modules."""


class SpectralMeshError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SpectralMeshError, ValueError):
    pass


class SingularLeadingCoefficient(SpectralMeshError, ValueError):
    pass


class DerivativeUnavailable(SpectralMeshError):
    pass


class RankDeficientBoundary(SpectralMeshError, ValueError):
    pass


class SingularCompletion(SpectralMeshError, ValueError):
    pass


class NumericallySingularU(SpectralMeshError):
    pass


class EigenResidualError(SpectralMeshError, ValueError):
    """An eigenfunction (or chain vector) fails its defining equations."""


class DegeneratePencil(SpectralMeshError):
    pass


class VanishingDenominator(SpectralMeshError, ZeroDivisionError):
    pass


class NonPolynomialLambda(SpectralMeshError, ValueError):
    pass


class SingularPencil(SpectralMeshError):
    pass


class MatchingAmbiguous(SpectralMeshError):
    pass


class ZeroMeanViolated(SpectralMeshError, ValueError):
    pass
