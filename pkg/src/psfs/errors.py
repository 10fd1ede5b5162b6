"""Exception types shared across the package."""


class PsfsError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PsfsError, ValueError):
    """Invalid parameters or data (bad grids, nonpositive heights, dark pixels)."""


class IncompatibleProblemError(PsfsError):
    """Model/boundary-condition combination for which uniqueness is not guaranteed."""


class SolverError(PsfsError):
    """Numerical failure inside the solver (NaN/Inf detected)."""
