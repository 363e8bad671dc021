"""Exception types shared across the package."""


class ArtifactError(Exception):
    """Base class for all package errors."""


class InvalidConfiguration(ArtifactError, ValueError):
    """Input data violates a precondition (shape, range, symmetry)."""


class NotPure(ArtifactError):
    """Generalized density is not a projection within tolerance."""


class NotProjector(ArtifactError):
    """One-body density is not a projection within tolerance."""


class NotBosonicQuasifree(ArtifactError):
    """Bosonic generalized density violates Gamma S Gamma = -Gamma."""


class NumericalFailure(ArtifactError):
    """Base class for failures of a time integration."""


class StepRejected(NumericalFailure):
    """Positivity of the generalized density was lost during a step."""


class NonFinite(NumericalFailure):
    """A state acquired non-finite entries."""


class NoContraction(NumericalFailure):
    """Picard iteration diverged; the interval should be shortened."""


class TooManyModes(ArtifactError):
    """Fock-space construction requested beyond the memory guard."""


class DegenerateGroundState(ArtifactError):
    """Quadratic Fock operator has no spectral gap above its ground state."""
