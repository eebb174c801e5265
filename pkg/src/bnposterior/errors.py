"""Exception types shared across the package."""


class BnposteriorError(Exception):
    """Base class for errors raised by this package."""


class DataFormatError(BnposteriorError):
    """Malformed input file (dataset CSV, network text file, feature table)."""


class CapExceededError(BnposteriorError):
    """An exhaustive enumeration was requested above its hard size cap."""


class ScoreUnderflowError(BnposteriorError):
    """Dirichlet pseudo-counts underflowed to zero for the requested family."""
