"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An input violates a documented precondition (shape, sign, range)."""


class InvalidConfigurationError(ValueError):
    """Solver settings that cannot produce a convergent iteration."""


class NumericalFailureError(ArithmeticError):
    """Non-finite values appeared during an iteration."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ParseError(ValueError):
    """Malformed input file. ``line`` is 1-based and counts the header."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
