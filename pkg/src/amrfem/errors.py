"""Exception types raised across the package."""


class AmrError(Exception):
    """Base class for all errors raised by amrfem."""


class MeshInvariantError(AmrError):
    """A mesh violates a structural invariant (orientation, conformity, ...)."""


class TopologyError(AmrError):
    """Edge topology cannot be built (e.g. non-manifold edge)."""


class GeometryError(AmrError):
    """Degenerate or invalid geometry (zero-area triangle, bad curve)."""


class MshParseError(AmrError):
    """Malformed MSH file; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AssemblyError(AmrError):
    """Inconsistent degree-of-freedom data during assembly."""


class ConstraintError(AmrError):
    """Conflicting or invalid Dirichlet constraints."""


class SolverError(AmrError):
    """Linear solver failed; carries the final relative residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonlinearSolverError(AmrError):
    """Nonlinear (Picard) iteration failed; carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ConfigError(AmrError):
    """Invalid configuration value (material, marking parameter, case id)."""


class MetricError(AmrError):
    """Error metric is undefined for the given inputs."""


class InterpolationError(AmrError):
    """A point could not be located on the reference mesh."""


class ScoringError(AmrError):
    """Isolation forest cannot score the given data."""
