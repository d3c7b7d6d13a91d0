"""Exception hierarchy shared by every module."""


class PhasePlaneError(Exception):
    """Base class for all errors raised by phaseplane."""


class ParseError(PhasePlaneError, ValueError):
    """Malformed expression text. ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifier(ParseError):
    pass


class DomainError(PhasePlaneError, ArithmeticError):
    """An expression was evaluated outside the domain of one of its nodes."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class NoOscillation(PhasePlaneError):
    """The orbit does not depart into real phase space, or never turns back."""


class NonReturningBranch(NoOscillation):
    """A branch ran into a guard before its velocity returned to zero."""


class NumericalFailure(PhasePlaneError):
    pass


class StepUnderflow(NumericalFailure):
    pass


class BlowUp(NumericalFailure):
    pass


class QuadratureError(NumericalFailure):
    pass


class RootFindError(NumericalFailure):
    pass


class NoSignChange(RootFindError):
    pass


class ConservativeFamily(RootFindError):
    """Closure defect vanishes across the whole bracket: every amplitude closes."""


class NotClosed(PhasePlaneError):
    pass


class InsufficientEvents(NumericalFailure):
    pass


class NoPeriodicAttractor(NumericalFailure):
    pass


class FactorVanishes(DomainError):
    """The velocity factor f2 has a zero (or changes sign) on the working range."""


class OutsideRange(NoOscillation):
    """No real phi solves G(phi) = F: the point lies beyond a turning point."""
