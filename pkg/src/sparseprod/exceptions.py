"""Exception hierarchy shared by every module of the package."""


class SparseProdError(Exception):
    """Base class for all errors raised by sparseprod."""


class ShapeError(SparseProdError, ValueError):
    """Operands have incompatible or invalid shapes."""


class NotPSDError(SparseProdError, ValueError):
    """A matrix expected to be positive semi-definite is indefinite."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class SingularSystemError(SparseProdError, ArithmeticError):
    """A linear system is singular or too ill-conditioned to solve.

    ``pivot`` carries the offending pivot (smallest eigenvalue) magnitude.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class CardinalityError(SparseProdError, ValueError):
    """Requested subset size is out of range."""


class DegenerateWeightsError(SparseProdError, ValueError):
    """Not enough strictly positive weights to sample or rescale from."""


class DegenerateKernelError(SparseProdError, ValueError):
    """Every k-subset of the kernel has a vanishing principal minor."""


class EnumerationTooLargeError(SparseProdError, ValueError):
    """Exact enumeration over k-subsets would exceed the configured cap."""


class MatrixFormatError(SparseProdError, ValueError):
    """A matrix text file is ill-formed.  ``line`` is 1-based."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(SparseProdError, ValueError):
    """An experiment configuration is invalid."""
