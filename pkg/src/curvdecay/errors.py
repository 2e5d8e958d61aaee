class NumericalFailure(RuntimeError):
    """Raised when a quadrature or integrator does not reach its tolerance."""


class ProfileError(ValueError):
    """Invalid curvature-decay profile parameters or data."""
