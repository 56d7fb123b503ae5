class SolverError(RuntimeError):
    """Base class for optimizer failures."""


class DivergenceError(SolverError):
    """The objective or one of its derivatives became non-finite."""


class LineSearchError(SolverError):
    """No step length decreasing the objective was found within budget."""


class LineSearchInternalError(SolverError):
    """A step certified by the strong Wolfe search failed its re-check."""
