"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class UsageError(TypeError):
    """The call is well-typed but not meaningful for this model variant."""


class InfiniteMeanError(ArithmeticError):
    """The first-passage law has no finite mean (zero drift)."""


class ConfigurationError(ValueError):
    """A numerical precondition on the discretisation does not hold."""
