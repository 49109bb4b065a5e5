"""Exception hierarchy.

Everything raised on purpose derives from :class:`SingspecError`.  Numerical
failures additionally derive from :class:`NumericalError`; the experiment
runner maps those to exit code 3 and configuration problems to exit code 2.
"""


class SingspecError(Exception):
    pass


class NumericalError(SingspecError):
    pass


class ConfigError(SingspecError):
    pass


# geometry
class SingularPoint(SingspecError, ValueError):
    pass


class OutOfChart(SingspecError, ValueError):
    pass


class BadMollifierRadius(SingspecError, ValueError):
    pass


class UnknownGalleryEntry(SingspecError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown gallery entry"


# mesh
class UnmeshableDomain(SingspecError, ValueError):
    pass


class GradingOverflow(NumericalError):
    pass


class SetNotResolved(SingspecError, ValueError):
    pass


class FormatError(SingspecError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# assembly
class MetricEvaluationFailed(NumericalError):
    pass


class NonFiniteEntry(NumericalError):
    pass


class DimensionMismatch(SingspecError, ValueError):
    pass


# capacity
class EmptyConstraintSet(SingspecError, ValueError):
    pass


class SolverBreakdown(NumericalError):
    pass


class UnresolvedRadius(NumericalError):
    pass


class DegenerateFit(NumericalError):
    pass


# spectrum
class ConvergenceFailure(NumericalError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class ShiftOnEigenvalue(NumericalError):
    pass


class RangeExceeded(SingspecError, ValueError):
    pass


class InsufficientSpectrum(NumericalError):
    pass


# transplant
class WindowTooNarrow(NumericalError):
    def __init__(self, message, found=0):
        self.found = found
        super().__init__(message)


class MeshMismatch(SingspecError, ValueError):
    pass


class DegenerateTransplant(NumericalError):
    pass


class ChainViolation(NumericalError):
    def __init__(self, message, failures=()):
        self.failures = list(failures)
        super().__init__(message)
