"""Exception types shared by the library and the command line."""


class InputError(ValueError):
    """Bad user input: shapes, ranges, files or config keys."""


class DomainError(InputError):
    """A value outside the mathematical domain of an operation."""


class InternalError(RuntimeError):
    """Internal state is inconsistent (stale cache, mismatched origins, ...)."""
