"""Numerical laboratory for Vlasov-type mean-field dynamics on a periodic phase space.

The package is organised bottom-up:

* :mod:`hvlasov.potential` -- pair potentials and their grid convolutions
* :mod:`hvlasov.phasefield` -- phase-space grids, complex fields, velocity Fourier transform
* :mod:`hvlasov.characteristics` -- N-body and mean-field characteristic flows
* :mod:`hvlasov.meanfield` -- Vlasov, Hamiltonian Vlasov and Hamilton Hartree solvers, bounds
* :mod:`hvlasov.manybody` -- N-particle transport solutions and the two-particle tensor solver
* :mod:`hvlasov.counting` -- projection/counting operator algebra and mean-field error estimators
* :mod:`hvlasov.cli` -- configuration driven experiment runner
"""

from .errors import InvalidArgument, IterationFailure, OutOfRange
from .potential import PotentialSpec, convolve, eval_derivatives, potential_constant
from .phasefield import (
    ComplexField,
    CoordinateKind,
    PhaseGrid,
    inverse_velocity_fourier,
    poisson_bracket,
    random_state,
    sobolev_norm,
    velocity_fourier,
)

from . import characteristics, counting, manybody, meanfield  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "InvalidArgument",
    "IterationFailure",
    "OutOfRange",
    "PotentialSpec",
    "convolve",
    "eval_derivatives",
    "potential_constant",
    "ComplexField",
    "CoordinateKind",
    "PhaseGrid",
    "inverse_velocity_fourier",
    "poisson_bracket",
    "random_state",
    "sobolev_norm",
    "velocity_fourier",
    "characteristics",
    "counting",
    "manybody",
    "meanfield",
]
