"""Exception types raised by the numerical modules."""


class BsNoiseError(RuntimeError):
    """Base class for all library errors."""


class NoConvergence(BsNoiseError):
    """The disentangling solver exhausted its iteration budget."""

    def __init__(self, gamma, r, residual):
        self.gamma = gamma
        self.r = r
        self.residual = residual
        super().__init__(
            f"disentangling solve did not converge at gamma={gamma!r}, r={r!r} "
            f"(residual {residual:.3e}); try a finer continuation path"
        )


class CutoffTooSmall(BsNoiseError):
    """The m1 series was truncated before its tail fell below tolerance."""


class GridTooSmall(BsNoiseError):
    """Probability mass lies outside the requested photon-number grid."""

    def __init__(self, message, defect=None):
        self.defect = defect
        super().__init__(message)


class TruncationExceeded(BsNoiseError):
    """A Fock-space simulation leaked more weight to the cutoff than allowed."""


class ConsistencyError(BsNoiseError):
    """An internal invariant failed by more than floating-point noise."""
