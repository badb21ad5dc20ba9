"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedBudgetError(ValueError):
    """The privacy budget cannot drive the requested mechanism (e.g. delta = 0)."""


class CompositionError(RuntimeError):
    """Two ledger entries charge the same data items."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or validated.

    The offending key is kept on ``field`` so the CLI can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
