"""Exception hierarchy shared by all modules."""


class NonlocalIndexError(Exception):
    """Base class for errors raised by this package."""


class DomainError(NonlocalIndexError, ValueError):
    """Invalid arguments: bad sizes, mismatched grids, non-Hermitian input."""


class DegenerateSymbolError(NonlocalIndexError):
    """A symbol has an eigenvalue in the zero band, so its Calderon subspace is undefined."""


class NumericalStabilityError(NonlocalIndexError):
    """A numerical decision (rank, tail fit, eigenvalue matching) could not be certified."""


class UnresolvedTailError(NumericalStabilityError):
    pass


class PathTooCoarseError(NumericalStabilityError):
    pass


class IllConditionedRankError(NumericalStabilityError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PreconditionError(NonlocalIndexError):
    """The problem does not satisfy the structural assumptions of a driver."""


class ConfigError(NonlocalIndexError, ValueError):
    """A run configuration is malformed or names an invalid problem."""
