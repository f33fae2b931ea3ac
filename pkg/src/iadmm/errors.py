"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shape does not match what a map or operator expects."""


class NumericError(ArithmeticError):
    """Non-finite values or a failed inner numerical routine."""


class EmptyBasisError(ValueError):
    """Orthonormalization produced no columns (input is numerically zero)."""


class ConvexityError(ValueError):
    """A function assumed convex produced a negative Bregman distance."""


class InvalidConstantError(ValueError):
    """A declared constant (Lipschitz bound, PD operator) fails a sampled check."""


class InvalidParametersError(ValueError):
    """Solver parameters violate a descent hypothesis.

    ``violated`` holds the names of the failing inequalities.
    """

    def __init__(self, message, violated=()):
        super().__init__(message)
        self.violated = tuple(violated)


class UnsupportedAutoError(ValueError):
    """An ``"auto"`` parameter was requested where no closed form applies."""


class AuditError(AssertionError):
    """A descent inequality was violated during an audited run."""

    def __init__(self, message, iteration=None, inequality=None):
        super().__init__(message)
        self.iteration = iteration
        self.inequality = inequality


class SolverAbort(RuntimeError):
    """Raised when a run aborts; carries the iteration index and partial trace."""

    def __init__(self, message, iteration, trace):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace


class MatrixFormatError(ValueError):
    """Malformed matrix text file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
