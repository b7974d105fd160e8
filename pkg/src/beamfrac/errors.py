"""Exception hierarchy shared by all beamfrac modules."""


class BeamFracError(Exception):
    """Base class for every error raised by beamfrac."""


class DomainError(BeamFracError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateElementError(BeamFracError):
    """The centerline tangent ||r'|| collapsed below the degeneracy floor."""


class DegenerateNormalError(BeamFracError):
    """The averaged interface tangent vanished and no cached normal exists."""


class ConfigError(BeamFracError):
    """Malformed or incomplete scenario configuration.

    ``lineno`` is the 1-based line in the offending file, when known.
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class SolverError(BeamFracError):
    """A solver could not complete."""


class StepFailure(SolverError):
    """Newton iterations did not converge within a load step."""

    def __init__(self, message, step=None, residual=None):
        self.step = step
        self.residual = residual
        super().__init__(message)


class LinearSolveError(SolverError):
    """The tangent system was singular or produced non-finite values."""


class DivergenceError(SolverError):
    """The explicit state became non-finite (time step probably too large)."""


class AssemblyStateError(SolverError):
    """The linearized operator produced non-finite eigenvalues."""


class UnsupportedScenarioError(BeamFracError):
    """The requested operation is not defined for this scenario."""
