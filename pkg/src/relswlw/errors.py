"""Exception types raised across the package."""


class DomainError(ValueError):
    """A value lies outside the physical or mathematical domain of an operation."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class GridMismatchError(ValueError):
    """Fields passed together do not live on the same grid."""


class CFLError(ValueError):
    """A requested time step violates the stability bound."""

    def __init__(self, message, dt=None, dt_max=None):
        super().__init__(message)
        self.dt = dt
        self.dt_max = dt_max


class RecoveryError(RuntimeError):
    """Conservative-to-primitive recovery failed in one or more cells."""

    def __init__(self, message, cells=()):
        super().__init__(message)
        self.cells = list(cells)


class InversionError(RuntimeError):
    """Newton inversion of the label map did not converge."""

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points


class ConfigError(ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
