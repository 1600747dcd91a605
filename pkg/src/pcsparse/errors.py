"""Exception types shared across the package."""


class ConformanceError(ValueError):
    """A field does not conform to the graph it is evaluated on."""


class DomainError(ValueError):
    """A numeric parameter is outside its admissible range."""


class SingularEdgeError(ArithmeticError):
    """A zero difference would be raised to a negative power."""


class CapabilityError(NotImplementedError):
    """The requested norm/exponent combination is not supported."""


class StepSizeError(RuntimeError):
    """Primal-dual iteration diverged for the given step sizes."""


class NumericalError(RuntimeError):
    """A solve produced non-finite values.  Carries the trace so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class TooLargeError(ValueError):
    """An exhaustive routine refused an instance above its size bound."""


class ParseError(ValueError):
    """Malformed input file.  Carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
