"""Exception types shared across the package."""


class DisparseError(Exception):
    """Base class for all library errors."""


class ParseError(DisparseError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DimensionMismatch(DisparseError):
    pass


class KernelMismatch(DisparseError):
    pass


class SingularBlock(DisparseError):
    """Eliminated block of a Schur complement is singular."""


class TooLarge(DisparseError):
    """Brute-force oracle asked to enumerate beyond its size cap."""


class Disconnected(DisparseError):
    pass


class NotConverged(DisparseError):
    """Iterative solver hit its iteration cap.

    Carries the best iterate so callers can decide what to do with it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DemandMismatch(DisparseError):
    """Total out-demand and in-demand disagree; signals an upstream bug."""


class ConditionViolated(DisparseError):
    """A checked precondition of internal patching failed.

    ``which`` names the failed condition ('a', 'b', 'c' or 'd').
    """

    def __init__(self, which, message=""):
        super().__init__(f"condition ({which}) violated" + (": " + message if message else ""))
        self.which = which


class PreconditionViolated(DisparseError):
    """A dynamic-structure invariant would be broken by this update/state."""

    def __init__(self, which, message=""):
        super().__init__(f"precondition '{which}' violated" + (": " + message if message else ""))
        self.which = which


class PatchingFailed(DisparseError):
    """Randomized patching produced an infeasible output (retryable)."""


class EdgeNotFound(DisparseError):
    """Delete/lookup of an edge that is not present."""


class NotCertified(DisparseError):
    """Operation requires a conductance certificate that is missing/too weak."""


class NotBipartite(DisparseError):
    pass


class BetaTooSmall(DisparseError):
    """Symmetrization strength below the threshold required by the guarantee."""


class QueryUnsupported(DisparseError):
    """The sparsifier mode does not support this query."""
