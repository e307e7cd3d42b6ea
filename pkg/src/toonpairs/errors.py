"""Exception types raised across the pipeline."""


class ToonPairsError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ToonPairsError, ValueError):
    pass


class DecodeError(ToonPairsError):
    pass


class InvalidGeometry(ToonPairsError, ValueError):
    pass


class EmptyRegion(ToonPairsError, ValueError):
    """A mask selects no pixels (total weight is zero)."""


class ChannelMismatch(ToonPairsError, ValueError):
    pass


class ExternalBackendFailure(ToonPairsError):
    """An external stylizer command failed.

    ``diagnostics`` carries the captured stderr (or a short reason) so it
    can be copied into the manifest.
    """

    def __init__(self, message, diagnostics=""):
        super().__init__(message)
        self.diagnostics = diagnostics


class MissingPrecomputed(ToonPairsError):
    pass


class PlacementInfeasible(ToonPairsError):
    pass


class ConfigError(ToonPairsError, ValueError):
    pass
