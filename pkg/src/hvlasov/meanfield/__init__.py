"""Mean-field solvers (Vlasov, Hamiltonian Vlasov, Hamilton Hartree) and their bounds."""

from .bounds import (
    BoundParams,
    b1_nbody,
    b2_nbody,
    flow_derivative_bound,
    flow_second_derivative_bound,
    lipschitz_factor,
    mfc_constants,
    q_m,
    second_derivative_bound,
    theoretical_bounds,
)
from .common import SolverParams, Trajectory
from .hamilton_vlasov import solve_hamilton_vlasov
from .hartree import (
    HartreeOperators,
    energy_hartree,
    hartree_energy_parts,
    mean_field_potential,
    solve_hamilton_hartree,
)
from .vlasov import solve_vlasov

__all__ = [
    "BoundParams",
    "HartreeOperators",
    "SolverParams",
    "Trajectory",
    "b1_nbody",
    "b2_nbody",
    "energy_hartree",
    "flow_derivative_bound",
    "flow_second_derivative_bound",
    "hartree_energy_parts",
    "lipschitz_factor",
    "mean_field_potential",
    "mfc_constants",
    "q_m",
    "second_derivative_bound",
    "solve_hamilton_hartree",
    "solve_hamilton_vlasov",
    "solve_vlasov",
    "theoretical_bounds",
]
