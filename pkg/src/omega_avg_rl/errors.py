"""Exception types shared across the package."""


class OmegaAvgRlError(Exception):
    """Base class for all errors raised by this package."""


class MalformedModel(OmegaAvgRlError):
    """An MDP description violates a structural invariant.

    Carries the full list of violations so a bad file is diagnosed in one pass.
    """

    def __init__(self, details):
        self.details = list(details)
        super().__init__("; ".join(self.details))


class ActionNotEnabled(OmegaAvgRlError):
    pass


class PolicyMismatch(OmegaAvgRlError):
    pass


class ParseError(OmegaAvgRlError):
    """HOA document rejected; carries the 1-based line number."""

    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class UnsupportedFeature(OmegaAvgRlError):
    pass


class NotDeterministic(OmegaAvgRlError):
    pass


class NonNegativeC(OmegaAvgRlError):
    pass


class BadBeta(OmegaAvgRlError):
    pass


class BadC1(OmegaAvgRlError):
    pass


class BadC2(OmegaAvgRlError):
    pass


class BadSchedule(OmegaAvgRlError):
    pass


class IllegalSuccessor(OmegaAvgRlError):
    pass


class IllegalEpsilon(OmegaAvgRlError):
    pass


class IllegalAction(OmegaAvgRlError):
    pass


class ProductTooLarge(OmegaAvgRlError):
    pass


class BadZeta(OmegaAvgRlError):
    pass


class BadGamma(OmegaAvgRlError):
    pass


class UnknownGenerator(OmegaAvgRlError):
    pass


class GenerationNotCommunicating(OmegaAvgRlError):
    pass


class BadRange(OmegaAvgRlError):
    pass
