"""Exception hierarchy shared across the package."""


class BillingError(Exception):
    """Base class for every error raised by zsbilling."""


class ValidationError(BillingError, ValueError):
    """An input violates a documented precondition."""


class PriceNotPositive(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class SequenceError(BillingError):
    """A reading or close arrived out of order for the current period."""


class PhaseError(BillingError):
    """Operation not allowed in the meter's current period phase."""


class AdjustmentBudgetExhausted(BillingError):
    pass


class DuplicateReading(BillingError):
    pass


class ReplacementOutOfPlace(BillingError):
    pass


class IncompletePeriod(BillingError):
    pass


class UnknownMeter(BillingError, KeyError):
    pass


class RoutingError(BillingError):
    pass


class DatasetError(ValidationError):
    pass


class StateFileError(BillingError):
    pass
