"""Exception hierarchy shared by all modules."""


class MWPTError(ValueError):
    """Base class for every error raised by :mod:`mwpt`."""


class PathExhausted(MWPTError):
    """A finite path has fewer digits than the requested level."""


class FilterFileError(MWPTError):
    """A filter-bank file could not be parsed."""


class ParaunitaryError(MWPTError):
    """A filter bank failed the paraunitarity check."""

    def __init__(self, message, deviation):
        super().__init__(message)
        self.deviation = deviation


class IncompleteCover(MWPTError):
    """The nodes of a packet tree do not cover the root."""


class ConfigError(MWPTError):
    """An experiment configuration is invalid."""
