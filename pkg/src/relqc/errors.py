"""Exception hierarchy shared by every module."""


class RelqcError(Exception):
    pass


class MalformedInput(RelqcError, ValueError):
    """A word, letter or payload that does not belong to the declared alphabet."""


class ConfigError(RelqcError):
    pass


class UnsupportedInstance(RelqcError):
    """The instance lacks the capability an operation needs (e.g. no word problem)."""


class ContractError(RelqcError):
    pass


class BudgetExceeded(RelqcError):
    """A bounded search ran out of room.

    ``partial`` carries whatever the search had established so far, e.g. a lower
    bound for a distance or the prefix of a distortion table.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
