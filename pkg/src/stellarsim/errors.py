"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class so
that CLI exit codes and tests can discriminate without string matching.
"""


class StellarSimError(Exception):
    """Base class for all package errors."""


class NonSymmetricError(StellarSimError):
    """Matrix asymmetry beyond the admitted tolerance."""


class NonSquareError(StellarSimError):
    """Operation requires a square matrix."""


class DimensionTooLargeError(StellarSimError):
    """Brute-force enumeration refused above its size guard."""


class DimensionMismatchError(StellarSimError):
    """Mode counts or vector lengths disagree."""


class CutoffTooSmallError(StellarSimError):
    """Fock cutoff too small: leakage above threshold or lossy embedding."""


class ZeroProjectionError(StellarSimError):
    """A projector annihilated the state."""


class NormalizationError(StellarSimError):
    """State norm violates what the operation requires."""


class PlanMismatchError(StellarSimError):
    """Gadget plan shape does not match the outcome it is applied to."""


class PhotonNumberMismatchError(StellarSimError):
    """Input and output occupations carry different photon totals."""


class RankBudgetTooSmallError(StellarSimError):
    """Finite-rank approximation cannot reach the requested accuracy."""


class UnderflowRiskError(StellarSimError):
    """An approximation parameter fell below double-precision reach.

    Raised instead of silently losing precision; the caller must relax the
    accuracy target or reduce the chain depth.
    """


class EnvelopeFailureError(StellarSimError):
    """Rejection-sampling envelope misconfigured (acceptance rate collapsed)."""


class ParseError(StellarSimError):
    """Malformed input file. ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"{message} (field: {field})"
        super().__init__(message)


class OddDimensionWarning(UserWarning):
    """Hafnian of an odd-dimension matrix is zero by convention."""
