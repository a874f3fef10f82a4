"""Exception hierarchy. Every domain error is a ``ValueError`` so callers that
only care about bad input can catch the builtin."""


class BetaCountError(ValueError):
    pass


class OutOfRange(BetaCountError):
    pass


class InvalidPolynomial(BetaCountError):
    pass


class BackendMismatch(BetaCountError):
    pass


class PointOutsideInterval(BetaCountError):
    pass


class DepthExceeded(BetaCountError):
    pass


class OutputTooLarge(BetaCountError):
    pass


class SupportViolation(BetaCountError):
    pass


class PieceBudgetExceeded(BetaCountError):
    pass


class OmegaExhausted(BetaCountError):
    pass


class InvalidParams(BetaCountError):
    pass
