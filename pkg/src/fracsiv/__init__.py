"""Space-fractional SIV reaction-diffusion solver using Crank-Nicolson ADI."""

from .adi import AdiWorkspace, SchemeConfig, half_step_reaction, intermediate_boundary, step, sweep_x, sweep_y
from .grunwald import FractionalOperator, GrunwaldWeights, apply_shifted, grunwald_weights, operator_matrix
from .implicit import SliceSystem, SolverError, build_slice_system, solve_slice
from .oracle import GlobalSystem, assemble_global, explicit_reference, unsplit_cn_step
from .scenario import Scenario, SnapshotRecord, load_scenario, midpoint_seed_state, run
from .siv import Grid, SivParams, SivState, reaction_field, reaction_terms

__version__ = "0.1.0"
