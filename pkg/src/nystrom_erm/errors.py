"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions."""


class ParseError(InvalidInputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalDomainError(ArithmeticError):
    """A matrix that should be PSD is indefinite beyond roundoff."""


class NumericalDivergenceError(ArithmeticError):
    def __init__(self, step, message="non-finite iterate"):
        self.step = step
        super().__init__(f"{message} at step {step}")


class InsufficientDataError(InvalidInputError):
    pass
