"""Exception types raised across the package."""


class GeometryError(ValueError):
    """Base class for invalid geometric input."""


class DomainError(GeometryError):
    """A chart point lies outside the open chart domain."""


class StencilError(GeometryError):
    """A finite-difference stencil cannot be placed inside the domain."""


class NotImmersionError(GeometryError):
    """The differential of the map is rank deficient at some point."""


class ConstraintError(GeometryError):
    """Family parameters violate a defining constraint or admissibility condition."""


class NotIsothermalError(GeometryError):
    """An operation that needs isothermal coordinates got a general chart."""


class ConvergenceError(RuntimeError):
    """The least-squares fit diverged or hit its iteration cap.

    The partial report is kept on ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
