"""Exception types shared across the package.

The CLI maps AssumptionViolation to exit code 2 and every other
QcascadeError to exit code 3.
"""


class QcascadeError(Exception):
    """Base class for all package errors."""


class DimensionError(QcascadeError, ValueError):
    """Matrix or port dimensions do not match."""


class PoleProximityError(QcascadeError):
    """Evaluation point grazes a pole of the function being evaluated."""

    def __init__(self, z, pole, message=None):
        self.z = z
        self.pole = pole
        super().__init__(
            message or f"evaluation at z={z} is within guard distance of pole {pole}"
        )


class DegenerateSubspaceError(QcascadeError):
    """Column space is degenerate with respect to the indefinite inner product."""


class DegeneracyError(QcascadeError):
    """Eigenvector data violates the non-degeneracy hypothesis of a factor builder.

    Carries a hint naming the workaround path (loop phase shift or
    eigenvector perturbation with a modified factor).
    """

    def __init__(self, message, hint="use a degeneracy strategy: phase_shift or perturb"):
        self.hint = hint
        super().__init__(f"{message} ({hint})")


class UnsupportedBoundaryError(QcascadeError):
    """Hamiltonian sits on the parabolic boundary between the two canonical variants."""


class NotPhysicallyRealizableError(QcascadeError):
    """Factor roots are inconsistent with a positive net coupling rate."""


class AssumptionViolation(QcascadeError):
    """A standing assumption of the construction fails; carries the assumption key."""

    def __init__(self, assumption, message):
        self.assumption = assumption
        super().__init__(f"assumption '{assumption}' violated: {message}")


class BoundarySingularityError(QcascadeError):
    """A zero or pole sits too close to a counting contour."""

    def __init__(self, message, shift_hint=0.0):
        self.shift_hint = shift_hint
        super().__init__(message)


class ResolutionError(QcascadeError):
    """Adaptive contour sampling could not resolve the winding number."""


class UnresolvedCellError(QcascadeError):
    """Root refinement failed to converge inside a subdivision cell."""


class PairingError(QcascadeError):
    """Zero/pole records cannot be completely paired; lists the orphans."""

    def __init__(self, unpaired, message=None):
        self.unpaired = list(unpaired)
        super().__init__(
            message
            or "unpaired records (likely missed roots, re-scan with a wider window): "
            + ", ".join(f"{r}" for r in self.unpaired)
        )


class RemovabilityError(QcascadeError):
    """Detaching a factor failed to make the shared zero/pole removable."""

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


class CorrespondenceError(QcascadeError):
    """No one-to-one match between exact and static records beyond the cutoff radius."""
