class ResourceCapError(RuntimeError):
    """A configured enumeration, DP or factorization budget was exceeded."""


class EnumerationCapError(ResourceCapError):
    pass


class RangeCapError(ResourceCapError):
    pass


class FactorizationBudgetError(ResourceCapError):
    """Raised with whatever was factored before the budget ran out."""

    def __init__(self, message, partial=None, remaining=None):
        super().__init__(message)
        self.partial = partial
        self.remaining = remaining
