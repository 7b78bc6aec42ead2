"""Exception types shared across the package."""


class VlcLimitsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidEpsilon(VlcLimitsError, ValueError):
    """Error budget outside the range the operation accepts."""


class AtomCapExceeded(VlcLimitsError):
    """A convolution would produce more distinct atoms than the configured cap."""


class UnknownSymbol(VlcLimitsError, KeyError):
    """Symbol not in the source support."""


class RankOutOfSupport(VlcLimitsError, IndexError):
    """Codeword rank exceeds the alphabet size."""


class NoValidParameter(VlcLimitsError):
    """No parameter pair satisfies the feasibility window (reported, never patched)."""


class NotConverged(VlcLimitsError):
    """Iterative solver hit its iteration cap.

    The ``residual`` attribute holds the best convergence gap reached.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class TypeCapExceeded(VlcLimitsError):
    """Type-class enumeration would exceed the configured cap."""


class Infeasible(VlcLimitsError):
    """No channel/map meets the constraint at the requested level."""


class OutOfRange(VlcLimitsError, ValueError):
    """Scalar parameter outside the feasible interval."""


class DpStateCapExceeded(VlcLimitsError):
    """Distortion lattice too irregular for the exact dynamic program."""


class ScaleExceeded(VlcLimitsError):
    """Problem size beyond the cap for an exhaustive search."""
