"""Exception types raised across the package."""


class RandKrylovError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(RandKrylovError, ValueError):
    pass


class SingularTriangular(RandKrylovError):
    """A triangular factor has a (numerically) zero diagonal entry."""

    def __init__(self, index, ratio):
        self.index = index
        self.ratio = ratio
        super().__init__(
            f"triangular factor numerically singular at diagonal {index} "
            f"(|r_jj| / max|r_jj| = {ratio:.3e})"
        )


class SingularMatrix(RandKrylovError):
    pass


class ParseError(RandKrylovError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class NonSquareError(RandKrylovError, ValueError):
    pass


class InvalidSketchSize(RandKrylovError, ValueError):
    pass


class SingularPadeDenominator(RandKrylovError):
    pass


class NegativeRealEigenvalue(RandKrylovError):
    """The principal square root is undefined for this spectrum."""

    def __init__(self, eigenvalue):
        self.eigenvalue = eigenvalue
        super().__init__(f"eigenvalue {eigenvalue!r} on the closed negative real axis")


class SchurNoConvergence(RandKrylovError):
    pass


class Breakdown(RandKrylovError):
    """The Krylov space became invariant before reaching the requested size.

    ``index`` is the (1-based) index of the basis vector that could not be
    formed; ``decomposition`` holds the truncated decomposition with
    ``index - 1`` columns, which is exact for f(A)b.
    """

    def __init__(self, index, decomposition=None):
        self.index = index
        self.decomposition = decomposition
        super().__init__(f"Krylov breakdown at basis vector {index}")


class SketchBreakdown(Breakdown):
    pass


class ConfigMissing(RandKrylovError):
    pass


class GeometryMismatch(RandKrylovError, ValueError):
    pass


class ReferenceNotConverged(RandKrylovError):
    pass


class ReferenceInfeasible(RandKrylovError, ValueError):
    """The requested reference rule cannot be applied to this problem."""
