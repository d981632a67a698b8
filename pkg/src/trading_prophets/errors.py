"""Domain exceptions.

Everything raised for a *modeling* reason (as opposed to a programming bug)
derives from DomainError, so the service layer and the CLI can map the whole
family to HTTP 400 / exit code 1 in one place.
"""


class DomainError(Exception):
    """Base class for all model-level errors."""


# distributions
class IntegrationFailure(DomainError):
    """A continuous-kind expectation could not be evaluated (non-finite input)."""


# instances
class UnknownInstance(DomainError):
    """builtin_instance got a name that is not registered."""


class InvalidParam(DomainError):
    """A builder or constructor parameter is outside its legal range."""


# offline oracle
class EmptySequence(DomainError):
    """A price sequence with zero periods."""


class NonPositivePrice(DomainError):
    """The budgeted model needs strictly positive prices (and threshold)."""


class ShapeMismatch(DomainError):
    """A bandit price matrix is ragged or not 2-D."""


# policies
class NotIid(DomainError):
    """An i.i.d.-only constructor was fed non-identical distributions."""


class SearchExhausted(DomainError):
    """No certified split found within the search budget."""


class LengthMismatch(DomainError):
    """Sample vector length does not match n - 1."""


class TooShort(DomainError):
    """The unknown-distribution policy needs n >= 3."""


class BadArmIndex(DomainError):
    """Bandit arm index outside [0, k)."""


# exact analytics
class UnsupportedDistKind(DomainError):
    """Exact evaluation asked of a distribution kind it cannot handle."""


class SupportTooLarge(DomainError):
    """Exact bandit enumeration would exceed the configured support cap."""


# dp
class TooManyPeriods(DomainError):
    """Revealed-order DP is capped at n <= 8 (factorial enumeration)."""


# sim harness
class ZeroOptimum(DomainError):
    """Paired ratio estimation is meaningless when mean(OPT) is at the noise floor."""
