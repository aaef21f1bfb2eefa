"""Exception hierarchy shared by the package."""


class FluxBranchError(Exception):
    """Base class for all package errors."""


class MeshError(FluxBranchError, ValueError):
    """Invalid mesh data."""


class MeshParseError(MeshError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class MeshOrientationError(MeshError):
    """A triangle is clockwise or degenerate, or a boundary edge is misoriented."""


class MeshTopologyError(MeshError):
    """Edge multiplicities or the boundary cycle are inconsistent."""


class ResourceError(FluxBranchError, MemoryError):
    """Requested object would exceed the memory guard."""


class AssemblyError(FluxBranchError):
    pass


class EvaluationError(FluxBranchError, ArithmeticError):
    """Nonlinearity evaluation failed; ``value`` holds the offending argument."""

    def __init__(self, message, value=None):
        self.value = value
        super().__init__(message)


class SpecError(FluxBranchError, ValueError):
    """Malformed nonlinearity expression."""


class HypothesisError(FluxBranchError, ValueError):
    """The nonlinearity does not satisfy a hypothesis required by an operation."""


class ConvergenceError(FluxBranchError):
    """An iteration did not converge. ``residual`` is the last residual norm."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class NoConvergence(ConvergenceError):
    pass


class LinearSolveError(ConvergenceError):
    pass


class TrivialSolutionError(ConvergenceError):
    """Newton converged, but to the trivial solution where a nontrivial one is required."""


class PreconditionError(FluxBranchError, ValueError):
    pass


class BranchError(FluxBranchError):
    """Continuation gave up; ``diagram`` holds the points accepted so far."""

    def __init__(self, message, diagram=None):
        self.diagram = diagram
        super().__init__(message)


class OracleRangeError(FluxBranchError, ValueError):
    pass


class ConfigError(FluxBranchError, ValueError):
    pass
