"""Exception hierarchy shared by all modules."""


class WBirkhoffError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(WBirkhoffError, ValueError):
    """A numeric parameter is outside its admissible range."""


class InputDomainError(WBirkhoffError, ValueError):
    """An input value is non-finite or outside the operation's domain."""


class ShapeError(WBirkhoffError, ValueError):
    """Dimensions of two inputs do not agree."""


class DegenerateNormalizerError(WBirkhoffError, ArithmeticError):
    """The weight normalizer A_N vanished."""


class SignalTooShortError(WBirkhoffError, ValueError):
    """A signal cannot supply the requested number of samples."""


class BudgetError(WBirkhoffError, ValueError):
    """A request exceeds a documented computational budget."""


class DivergingBoundError(WBirkhoffError, ArithmeticError):
    """A coefficient of the theoretical bound is infinite."""


class TooNoisyError(WBirkhoffError, ValueError):
    """A Monte Carlo experiment was requested with too few trials."""
