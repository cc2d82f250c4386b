class InvalidArgument(ValueError):
    pass


class DomainError(ValueError):
    """Argument outside the mathematical domain (e.g. a nonpositive density)."""


class ShapeError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


class ResourceLimitError(MemoryError):
    pass


class ConfigError(ValueError):
    pass
