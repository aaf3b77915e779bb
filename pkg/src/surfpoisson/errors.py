"""Exception hierarchy shared by all modules."""


class SurfPoissonError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(SurfPoissonError):
    pass


class DegenerateMetric(GeometryError):
    """|g1 x g2|^2 fell below the configured floor."""


class ZeroTangent(GeometryError):
    """The pulled-back boundary tangent n1 g2 - n2 g1 vanished."""


class MeshFailure(SurfPoissonError):
    pass


class UnsupportedOrder(SurfPoissonError, ValueError):
    pass


class SolverError(SurfPoissonError):
    pass


class MaxIterExceeded(SolverError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IncompatibleLoad(SolverError):
    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class SingularInteriorBlock(SolverError):
    pass


class EigenNoConvergence(SolverError):
    pass


class ConfigError(SurfPoissonError, ValueError):
    pass
