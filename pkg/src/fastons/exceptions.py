"""Exception hierarchy shared by every module."""


class FonsError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(FonsError, ValueError):
    pass


class DegeneratePair(FonsError, ArithmeticError):
    """Both entries of a Givens target pair are zero."""


class HyperbolicBreakdown(FonsError, ArithmeticError):
    """The pivot of a hyperbolic rotation does not dominate its partner.

    Analytically impossible for the fast learner (the pivot squared minus
    the annihilated entry squared is eta >= 1), so this only fires through
    round-off or a corrupted state.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NumericalDivergence(FonsError, ArithmeticError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DataError(FonsError):
    """Input data could not be read or is unusable."""


class ParseError(DataError, ValueError):
    def __init__(self, message, row):
        super().__init__(f"row {row}: {message}")
        self.row = row


class UnsupportedFormat(DataError, ValueError):
    pass


class DegenerateRange(DataError, ValueError):
    pass


class UnstableProcess(DataError, ValueError):
    pass
