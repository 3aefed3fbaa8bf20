"""Exception hierarchy shared by all modules."""


class CensTailError(Exception):
    """Base class for every error raised by censtail."""


class DataError(CensTailError, ValueError):
    """Malformed or invalid input observations."""


class EstimatorUndefined(CensTailError, ArithmeticError):
    """The requested estimator has no value at this threshold.

    Raised by point estimators; path sweeps catch it and store an
    undefined marker instead.
    """


class DegenerateKaplanMeier(EstimatorUndefined):
    """Kaplan-Meier survival is zero at the threshold order statistic."""


class NoAdmissibleK(CensTailError, ArithmeticError):
    """No threshold satisfies the adaptive selection rule."""


class BootstrapFailure(CensTailError, ArithmeticError):
    """Bootstrap could not produce enough defined replicates."""
