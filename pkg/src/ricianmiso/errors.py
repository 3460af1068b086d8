"""Exception hierarchy shared by the simulator and the asymptotic solver."""


class RicianMisoError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RicianMisoError, ValueError):
    """An input lies outside the domain of the model."""


class DecompositionError(RicianMisoError):
    """A correlation matrix is not Hermitian positive semidefinite."""


class DegenerateChannelError(RicianMisoError):
    """The channel carries no energy, so the precoder cannot be normalized."""


class NumericalError(RicianMisoError):
    """A computation produced NaN, a negative iterate or no bracketed root."""


class ConvergenceError(NumericalError):
    """The fixed-point iteration did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateRegimeError(NumericalError):
    """Delta <= 0: the asymptotic SINR expressions are not valid here."""


class TranscriptionError(NumericalError):
    """A deterministic-equivalent term came out with an impossible sign."""


class ConfigError(RicianMisoError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class ReportError(RicianMisoError):
    """Result rows cannot be turned into the requested report."""
