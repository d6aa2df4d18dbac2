"""Exception types raised across the package.

Numerical guards (overflow, ill-conditioning, truncation, degeneracy) share the
``NumericalGuard`` base so the scenario runner can map them to a single exit code.
"""


class NumericalGuard(ArithmeticError):
    """A computation was refused because its result would not be trustworthy."""


class MatrixOverflow(NumericalGuard):
    pass


class DegenerateSpectrum(NumericalGuard):
    pass


class IllConditionedMetric(NumericalGuard):
    pass


class TruncationTooSmall(NumericalGuard):
    def __init__(self, message, minimal_n=None):
        super().__init__(message)
        self.minimal_n = minimal_n


class NotNormalized(ValueError):
    pass


class NotHermitian(ValueError):
    pass


class BadCoefficients(ValueError):
    pass


class PreconditionFailed(ValueError):
    def __init__(self, message, hypothesis=None):
        super().__init__(message)
        self.hypothesis = hypothesis


class ComplexSpectrumWarning(UserWarning):
    """The Hamiltonian has eigenvalues with non-zero imaginary part; SH = H^dagger S cannot hold."""
