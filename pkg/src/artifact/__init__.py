"""Bogoliubov-de Gennes and Hartree-Fock-Bogoliubov dynamics on a periodic lattice.

Submodules: lattice, quasifree, geometry, dynamics_fermi, dynamics_bose,
fock_oracle, cli.
"""

from . import dynamics_bose, dynamics_fermi, fock_oracle, geometry, lattice, quasifree
from .errors import (
    ArtifactError,
    DegenerateGroundState,
    InvalidConfiguration,
    NoContraction,
    NonFinite,
    NotBosonicQuasifree,
    NotProjector,
    NotPure,
    NumericalFailure,
    StepRejected,
    TooManyModes,
)

__version__ = "0.1.0"

__all__ = [
    "lattice",
    "quasifree",
    "geometry",
    "dynamics_fermi",
    "dynamics_bose",
    "fock_oracle",
    "ArtifactError",
    "InvalidConfiguration",
    "NotPure",
    "NotProjector",
    "NotBosonicQuasifree",
    "NumericalFailure",
    "StepRejected",
    "NonFinite",
    "NoContraction",
    "TooManyModes",
    "DegenerateGroundState",
]
