"""Radial focusing Hartree equation ``i u_t + Lap u + (|x|^-3 * |u|^2) u = 0`` on R^5."""
from .evolution import EvolutionConfig, RunOutcome, TrajectorySample, Verdict, evolve, strang_step
from .functionals import (
    ConservedSet,
    Inconsistent,
    Regime,
    RegimeKind,
    classify,
    conserved_set,
    eta,
    mass_energy_ratio,
    threshold_roots,
)
from .grid import (
    OMEGA,
    GridMismatch,
    RadialField,
    RadialGrid,
    apply_laplacian,
    build_grid,
    integrate,
    moment,
    radial_derivative,
    tail_l2_sq,
)
from .ground_state import (
    GroundState,
    NonConvergence,
    SolverParams,
    ZeroField,
    get_ground_state,
    modulated,
    pohozaev_residuals,
    proximity_fit,
    solve_ground_state,
)
from .potential import lv_quartic, newton_potential, tail_lv_quartic
from .virial import (
    ConstraintViolated,
    CutoffProfile,
    VirialConfig,
    a_R_bound,
    build_cutoff,
    radial_sobolev_quotient,
    tb_finite_variance,
    tb_localized,
    tb_radial,
    variance,
    variance_rate,
    z_R,
)

__version__ = "0.1.0"
