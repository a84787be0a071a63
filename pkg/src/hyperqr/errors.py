class HyperQRError(Exception):
    """Base class for all library errors."""


class InvalidArityError(HyperQRError, ValueError):
    pass


class BudgetExceeded(HyperQRError):
    """An exact computation would exceed its configured enumeration budget."""

    def __init__(self, message, needed=None, budget=None):
        super().__init__(message)
        self.needed = needed
        self.budget = budget


class NotPartiteError(HyperQRError, ValueError):
    pass


class UndefinedDensityError(HyperQRError, ValueError):
    pass


class ContractError(HyperQRError, ValueError):
    """A caller-supplied object violates an operation's contract."""


class InternalError(HyperQRError, AssertionError):
    """A computed quantity violated a mathematical invariant (indicates a bug)."""


class MalformedInputError(HyperQRError, ValueError):
    pass
