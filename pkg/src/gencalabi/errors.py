"""Exception types shared across the package."""


class GenCalabiError(Exception):
    """Base class for all package errors."""


class DomainError(GenCalabiError, ValueError):
    """An elementary function or chart was evaluated outside its domain."""

    def __init__(self, func, value, message=None):
        self.func = func
        self.value = value
        super().__init__(message or f"{func}: argument {value!r} outside domain")


class ParseError(GenCalabiError, ValueError):
    def __init__(self, offset, message):
        self.offset = offset
        super().__init__(f"at offset {offset}: {message}")


class UnknownIdentifier(ParseError):
    pass


class UnboundConstant(GenCalabiError, KeyError):
    def __str__(self):
        return f"constant {self.args[0]!r} is not bound"


class SingularFrame(GenCalabiError, ArithmeticError):
    pass


class SingularMetric(GenCalabiError, ArithmeticError):
    pass


class BlockStructureViolated(GenCalabiError):
    pass


class NonConvergence(GenCalabiError, RuntimeError):
    """Newton iteration ran out of steps; carries the best iterate."""

    def __init__(self, message, best=None, residual=None, iterations=None):
        self.best = best
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class ShapeMismatch(GenCalabiError, ValueError):
    pass


class ConfigError(GenCalabiError, ValueError):
    pass
