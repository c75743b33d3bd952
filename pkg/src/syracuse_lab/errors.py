class BudgetError(Exception):
    """A requested computation exceeds a configured size/memory budget."""


class LevelTooLarge(BudgetError):
    pass


class BudgetExceeded(BudgetError):
    pass


class WindowTooLarge(BudgetError):
    pass


class BadLevel(ValueError):
    pass


class BadParameter(ValueError):
    pass


class SpaceMismatch(ValueError):
    pass


class EmptyRange(ValueError):
    pass


class OutOfStrip(ValueError):
    pass


class UnsupportedB(ValueError):
    pass


class BadEps(ValueError):
    pass


class InvariantViolation(AssertionError):
    """An internal consistency check failed (CLI exit code 1)."""
