"""Exception types shared across the engine layers."""


class PhnError(Exception):
    """Base class for domain-level failures."""


class InsufficientDataError(PhnError):
    """A computation's minimum-data gate was not met."""


class OutOfModelRangeError(PhnError):
    """An input falls outside the validity range of a knowledge table."""


class NoRouteError(PhnError):
    """No route exists from the current node to the goal set."""


class BankError(PhnError):
    """The knowledge-bank file is malformed or fails validation."""
