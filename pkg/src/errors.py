"""
Иерархия исключений библиотеки восстановления разреженных сигналов.

CLI отображает ConfigError в код выхода 2, а любой RecoveryFailure в код 1.
"""


class SparseToneError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(SparseToneError):
    """Invalid parameters, config file or CLI input."""


class NumericalError(SparseToneError):
    """Non-finite values met during quadrature or evaluation."""


class RecoveryFailure(SparseToneError):
    """A recovery stage could not produce a usable result."""


class SingularDesignError(RecoveryFailure):
    """Least-squares design matrix is rank deficient."""


class EnergyTooLowError(RecoveryFailure):
    """No heavy samples were found (the one-cluster premise failed)."""


class LocationFailedError(RecoveryFailure):
    """Frequency voting did not reach a majority."""
