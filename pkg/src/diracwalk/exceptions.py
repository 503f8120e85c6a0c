"""Exception types shared across the package."""


class InfeasibleError(Exception):
    """A construction step has no solution.

    ``witness`` holds whatever proves it (offending eigenvalues, per-factor
    root sets); ``report`` is set when a full FeasibilityReport is available.
    """

    def __init__(self, message, witness=None, report=None):
        super().__init__(message)
        self.witness = witness if witness is not None else {}
        self.report = report


class RankDeficientError(ValueError):
    """Lattice directions do not span the spatial dimension."""


class UnsupportedError(ValueError):
    """Operation not defined for the given walk (e.g. site-dependent fields)."""
