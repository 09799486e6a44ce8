"""Exception types raised across the package."""


class EnvProbeError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(EnvProbeError, ValueError):
    pass


class DimensionMismatchError(EnvProbeError, ValueError):
    pass


class NotHermitianError(EnvProbeError, ValueError):
    pass


class NotOrthogonalError(EnvProbeError, ValueError):
    pass


class InsufficientSamplesError(EnvProbeError, ValueError):
    """The trajectory does not cover the window a stencil needs."""


class NonUniformGridError(EnvProbeError, ValueError):
    pass


class SymmetryError(EnvProbeError, ValueError):
    """A derivative matrix lacks the (anti)symmetry its order requires."""


class NonPhysicalDerivativesError(EnvProbeError, ValueError):
    """Derivative data imply an indefinite coupling Gram matrix."""


class AlreadyProjectedError(EnvProbeError, ValueError):
    pass
