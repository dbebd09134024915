"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input failed a shape, symmetry, positivity or normalization check."""


class SdpConvergenceError(RuntimeError):
    """The interior-point solver stopped before closing the duality gap.

    Carries the best iterate seen so callers can still report something.
    """

    def __init__(self, message, *, iterate=None, gap=float("nan"), iterations=0):
        super().__init__(message)
        self.iterate = iterate
        self.gap = gap
        self.iterations = iterations


class ExtractionError(RuntimeError):
    """Pointer-POVM extraction could not produce a usable ensemble."""
