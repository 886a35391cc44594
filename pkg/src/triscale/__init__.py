"""Simulation and multiscale reduction of an SITPYR epidemic model with reinfection."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConstraintError,
    DomainError,
    InvalidInputError,
    NoEpidemic,
    NoExit,
    NumericalError,
    StiffnessError,
    TriscaleError,
)
from .model import ModelParams, Region, State5, State6, classify_region, jacobian, r0_fast
from .equilibria import all_equilibria, endemic_equilibria, existence_verdict
from .fast import map_F, map_F_tilde, solve_final_size
from .maps import iterate_epochs, map_G, phi, slow_exit_time
from .integrator import IntegratorConfig, Trajectory, basin_sample, integrate
from .bifurcation import branch_scan, detect_bifurcations, lp_curve
