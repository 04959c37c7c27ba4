"""Exception hierarchy shared by every module."""


class MaslovBoxError(Exception):
    """Base class for all library errors."""


class ConfigError(MaslovBoxError):
    """Invalid input detected before any numerical work starts."""


class AssumptionError(ConfigError):
    """A sampled structural assumption failed; ``witness`` locates it."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NumericalError(MaslovBoxError):
    """A computation ran but could not meet its tolerance."""

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail
