"""Exception types shared across the package."""


class KnockoffError(Exception):
    """Base class for all errors raised by this package."""


class ZeroColumn(KnockoffError):
    """A design column has (numerically) zero norm and cannot be normalized."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"column {column} has norm below 1e-12")


class SingularGram(KnockoffError):
    """The Gram matrix X'X is singular (or numerically so)."""


class SolverDiverged(KnockoffError):
    """The interior-point solver failed to make progress."""


class InfeasibleGap(KnockoffError):
    """2*Sigma - diag(s) has a negative eigenvalue beyond tolerance."""


class DimensionError(KnockoffError):
    """Matrix/vector shapes outside the supported regime."""


class DegenerateResiduals(KnockoffError):
    """n == p leaves no residual degrees of freedom to estimate the noise level."""


class MaxIterations(KnockoffError):
    """Coordinate descent exceeded the sweep budget without converging."""


class SingularAugmentedGram(KnockoffError):
    """The 2p x 2p augmented Gram matrix is too ill-conditioned to invert."""


class ParseError(KnockoffError):
    """A CSV cell could not be parsed as a number."""

    def __init__(self, line: int, column: int, message: str = ""):
        self.line = line
        self.column = column
        detail = f": {message}" if message else ""
        super().__init__(f"bad value at line {line}, column {column}{detail}")


class ShapeMismatch(KnockoffError):
    """Design and response have incompatible shapes."""


class TooManyFeatures(KnockoffError):
    """More features than observations after column cleanup (p > n unsupported)."""
