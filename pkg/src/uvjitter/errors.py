"""Exception and warning types."""


class UvJitterError(Exception):
    pass


class InputError(UvJitterError, ValueError):
    """Bad argument value (non-finite entries, negative deviation, ...)."""


class DomainError(InputError):
    """A perturbed geometry left the admissible angle range."""

    def __init__(self, message, angle=None):
        super().__init__(message)
        self.angle = angle


class SingularMatrixError(UvJitterError, ArithmeticError):
    def __init__(self, message, det=0.0):
        super().__init__(message)
        self.det = det


class NonSmoothPointError(UvJitterError):
    """The finite-difference stencil touched an empty common volume."""


class DegenerateFormError(UvJitterError):
    """Square completion impossible because the curvature matrix is singular."""


class PointMassDistribution(UvJitterError):
    """Every eigenvalue of the quadratic form vanished; power is deterministic."""

    def __init__(self, value):
        super().__init__(f"received power is deterministic at {value!r} W")
        self.value = value


class ConfigError(InputError):
    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key


class QuadratureWarning(UserWarning):
    pass
