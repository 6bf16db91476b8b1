"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`InlaError`.
The ``exit_code`` attribute is what the command line returns when the error
escapes a subcommand: 2 for bad input, 3 for numerical failure, 4 for
configuration problems.
"""


class InlaError(Exception):
    exit_code = 3


class InputError(InlaError):
    exit_code = 2


class ConfigError(InlaError):
    exit_code = 4


class SpecError(ConfigError):
    pass


class NumericalError(InlaError):
    exit_code = 3


class NotPositiveDefinite(NumericalError):
    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class IsolatedUnit(InputError):
    def __init__(self, units):
        self.units = list(units)
        super().__init__(f"units without neighbours cannot carry an ICAR effect: {self.units}")


class TooFewLevels(SpecError):
    pass


class NewtonDivergence(NumericalError):
    def __init__(self, message, trace=()):
        self.trace = list(trace)
        super().__init__(message)


class ModeSearchFailure(NumericalError):
    def __init__(self, message, best_theta=None, best_value=None):
        self.best_theta = best_theta
        self.best_value = best_value
        super().__init__(message)


class NonConcaveMode(NumericalError):
    pass


class ExplorationTooLarge(NumericalError):
    pass


class MarginalUnavailable(NumericalError):
    pass


class DiagnosticsUnavailable(NumericalError):
    pass


class OracleTooLarge(ConfigError):
    pass


class OracleNotConverged(NumericalError):
    pass
