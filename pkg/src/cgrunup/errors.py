"""Exception types raised by the library.

Numerical failures (breaking, characteristic points, instability) derive from
:class:`NumericalFailure`; the CLI maps them to exit code 4.
"""


class CGRunupError(Exception):
    """Base class for all library errors."""


class ScenarioError(CGRunupError):
    """Invalid or inconsistent scenario configuration."""


class NumericalFailure(CGRunupError):
    """A computation cannot proceed for mathematical reasons."""


class InsufficientGridError(NumericalFailure, ValueError):
    pass


class OrderGridMismatchError(NumericalFailure, ValueError):
    pass


class CharacteristicPointError(NumericalFailure):
    """``I - tau'(x) A1(x)`` is singular somewhere on the grid."""

    def __init__(self, x, det):
        self.x = float(x)
        self.det = float(det)
        super().__init__(f"characteristic point at x={self.x:.6g} (|det(I-A)|={self.det:.3e})")


class HodographFoldError(NumericalFailure):
    pass


class BreakingError(NumericalFailure):
    """Raised by the pipeline when the non-breaking check fails."""


class PostBreakingError(NumericalFailure):
    pass


class HorizonError(NumericalFailure):
    pass


class InstabilityError(NumericalFailure):
    pass


class SpectralResolutionError(NumericalFailure):
    pass
