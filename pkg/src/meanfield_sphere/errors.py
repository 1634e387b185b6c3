"""Exception types shared across the package."""


class MeanFieldError(Exception):
    """Base class for all errors raised by this package."""


class TailDivergence(MeanFieldError):
    """The fitted decay slope is too close to the integrability threshold.

    The planar mass integral converges only when the asymptotic slope
    exceeds 2l+2; below that the far-field tail carries infinite mass and
    no meaningful beta can be reported.
    """


class StepFailure(MeanFieldError):
    """The adaptive integrator underflowed its minimum step size."""


class EmptyScan(MeanFieldError):
    """A root scan was requested on a window containing no samples."""


class GridExceedsTrajectory(MeanFieldError):
    """A colatitude node maps to a radius beyond the integrated trajectory.

    Re-integrate with a larger truncation radius to cover the grid.
    """


class NoConvergence(MeanFieldError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class SingularJacobian(MeanFieldError):
    """The Newton matrix is singular.

    Expected at the degenerate parameters lambda = k(k+1) when linearizing
    around the zero state.
    """
