"""Exception hierarchy for the CTAP chain simulator."""


class CTAPError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(CTAPError, ValueError):
    """A configuration violates one of its invariants."""


class ConfigParseError(ConfigurationError):
    """A configuration file could not be parsed."""


class DimensionError(CTAPError, ValueError):
    """Array or chain dimensions do not agree."""


class DegenerateInputError(CTAPError, ValueError):
    """Both pulse amplitudes vanish, the eigenstate formulas are undefined."""


class TargetUnavailableError(CTAPError, ValueError):
    """A miscalibration targets a pulse family the chain does not have."""


class InsufficientDataError(CTAPError, ValueError):
    """A trajectory lacks the snapshots an analysis needs."""


class NumericalError(CTAPError, RuntimeError):
    """A dense linear-algebra routine failed."""


class IntegrationError(CTAPError, RuntimeError):
    """The time integrator produced a non-finite state.

    Attributes
    ----------
    time : float
        Time of the last step that was attempted.
    """

    def __init__(self, message, time):
        super().__init__(f"{message} (t={time!r})")
        self.time = time


class StateValidityError(CTAPError, RuntimeError):
    """The density matrix left its physical tolerance band."""

    def __init__(self, message, time=None):
        suffix = "" if time is None else f" (t={time!r})"
        super().__init__(message + suffix)
        self.time = time
