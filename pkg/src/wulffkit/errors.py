"""Exception types shared across the package."""


class DomainError(ValueError):
    """Evaluation requested outside a function's domain (e.g. the origin
    for a positively homogeneous anisotropy)."""


class UsageError(ValueError):
    """Inconsistent arguments or configuration."""


class GridSizeError(UsageError):
    """Grid too small for the requested stencil."""


class RangeError(UsageError):
    """Requested value lies outside an invertible range."""


class ExtentError(UsageError):
    """Grid extents leave the available data window."""


class ConstructionError(UsageError):
    """Family construction data violates a structural requirement."""


class ExcludedPointError(ValueError):
    """Pointwise evaluation at a gradient-degenerate (excluded) point."""


class EmptyReportError(ValueError):
    """Every grid point was excluded; nothing to report."""


class AssumptionViolationError(RuntimeError):
    """A structural hypothesis (positivity, convexity) failed at runtime."""


class CertificationError(RuntimeError):
    """A sampled certification check failed (e.g. non-convex body)."""


class DegeneracyError(RuntimeError):
    """The profile integrator hit a degenerate point (second derivative of
    the gradient-energy density vanished) and refuses to continue."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


class StagnationError(RuntimeError):
    """Line search failed to make progress."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegenerateInputError(UsageError):
    """Input is degenerate for the requested check (e.g. an affine wave
    profile, for which both sides of the residual vanish identically)."""
