"""Exception hierarchy shared by every stage of the pipeline."""


class AnchorTMError(Exception):
    """Base class. ``stage`` is filled in by the pipeline orchestrator."""

    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details
        self.stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class DomainError(AnchorTMError, ValueError):
    """Invalid input or violated precondition."""

    exit_code = 2


class StructuralError(AnchorTMError):
    """The data does not have the expected combinatorial structure."""

    exit_code = 3


class SingularityError(AnchorTMError, ArithmeticError):
    """A linear system was numerically singular."""

    exit_code = 4
