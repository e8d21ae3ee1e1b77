"""Exception hierarchy.

Every error raised by the library derives from :class:`BernoulliError`, which
is itself a ``ValueError`` so callers that only care about bad input can catch
the builtin.
"""


class BernoulliError(ValueError):
    pass


class HorizonTooLarge(BernoulliError):
    pass


class ProbabilityOutOfRange(BernoulliError):
    pass


class IndexOutOfRange(BernoulliError):
    pass


class TimeIndexOutOfRange(BernoulliError):
    pass


class SpaceMismatch(BernoulliError):
    pass


class NotPredictable(BernoulliError):
    pass


class NotAdapted(BernoulliError):
    pass


class OrderMismatch(BernoulliError):
    pass


class NonConstantP(BernoulliError):
    pass


class NegativeTime(BernoulliError):
    pass


class NotAMartingale(BernoulliError):
    pass


class NonPositiveInput(BernoulliError):
    pass


class DegenerateGradient(BernoulliError):
    pass


class ArbitrageViolation(BernoulliError):
    pass


class InvalidPrice(BernoulliError):
    pass


class InvalidStrike(BernoulliError):
    pass


class UndefinedFunctionValue(BernoulliError):
    pass
