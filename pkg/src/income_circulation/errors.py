"""Exception hierarchy.

Every domain failure derives from :class:`ICMError`; the CLI maps these to
exit code 1 and reports ``type(err).__name__`` as the error name.
"""


class ICMError(Exception):
    """Base class for domain errors raised by this package."""


# matrix / vector construction
class NonFinite(ICMError, ValueError):
    pass


class NegativeEntry(ICMError, ValueError):
    pass


class ColumnSumViolation(ICMError, ValueError):
    pass


class OverSpending(ICMError, ValueError):
    """An agent pays out more than it holds (would need credit)."""


class InvalidWealth(ICMError, ValueError):
    pass


class DimensionMismatch(ICMError, ValueError):
    pass


class SizeCapExceeded(ICMError):
    """A dense n x n result was requested above the configured size cap."""


# graph analysis
class NotStronglyConnected(ICMError):
    pass


class NotPrimitive(ICMError):
    pass


class ExponentCapExceeded(NotPrimitive):
    """No all-positive power found below a user-configured cap.

    Distinct from a proven imprimitive pattern: the input may still be
    primitive with an exponent above the cap.
    """


class Unreachable(ICMError):
    pass


# generosity
class NotCohesive(ICMError):
    pass


class NotZeroSum(ICMError, ValueError):
    pass


class NotPositive(ICMError, ValueError):
    pass


# block analysis
class NotPureHoarder(ICMError):
    pass


class SubEconomyNotWhole(ICMError):
    pass


class SingularSystem(ICMError):
    pass


# dynamics
class InsufficientDonorWealth(ICMError, ValueError):
    pass


class PatternBroken(ICMError):
    """A perturbation pushed a nonzero entry to the structural-zero floor."""


# ingest
class ZeroWealthPayer(ICMError, ValueError):
    pass


class EmptyWindow(ICMError, ValueError):
    pass


class UnknownProfile(ICMError, ValueError):
    pass
