"""Exception hierarchy shared by all engine modules."""


class FedosovError(Exception):
    """Base class for engine errors."""


class DimensionMismatch(FedosovError):
    pass


class JetOrderExhausted(FedosovError):
    """A computation needed jet coefficients beyond the trusted order."""


class NotInvertible(FedosovError):
    pass


class DegenerateMetric(NotInvertible):
    pass


class NonHermitianMetric(FedosovError):
    pass


class IncompatibleKinds(FedosovError):
    """Value kinds (scalar / endomorphism / section) cannot be combined."""


class NegativeLambdaPower(FedosovError):
    """Division by the formal parameter left a nonzero lambda^0 remnant."""


class NonClosedOmega(FedosovError):
    pass


class NonTypeOneOne(FedosovError):
    """A two-form required to be of type (1,1) has (2,0) or (0,2) parts."""


class ConfigError(FedosovError):
    pass


class MissingFibreMetric(FedosovError):
    pass
