"""Conormal Euler-Lagrange orbits on model surfaces and their critical energy values."""

from .errors import (BracketError, ChainViolation, ConfigError, ConorbitError, DomainError, NumericalFailure,
                     UnsupportedOperation)
from .models import (SurfaceModel, build_model, eval_lagrangian, fenchel_hamiltonian, half_plane_horocycle,
                     list_models, plane_patch_custom, theta_at, torus_magnetic, torus_mechanical)
from .pathspace import (BoundarySpec, DiscretePath, LoopPath, action_gradient, circle, classify_component,
                        discrete_action, hline, lower_bound_estimate, point, vline)
from .flow import FlowState, integrate_el, no_connection_certificate, verify_solution
from .solvers import MinimizeConfig, StringConfig, minimize_action, mountain_pass, struwe_scan
from .critical import (CriticalBracket, LatticeClass, bracket_critical, chain_audit, e0,
                       hamiltonian_sup_upper, k_N_estimate, k_obstruction, k_omega, loop_probe)
from .scenarios import Scenario, get_scenario

__version__ = "0.1.0"
