"""filerep: a finite-capacity file-replication network laboratory.

Exact event-driven simulation of the replication chain, its deterministic
fluid limits (with oblique Skorokhod reflection in a triangle), the
stationary law of the fast free-capacity chain, martingale verification
tooling, and sqrt(N)-scale diffusion estimators.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    FilerepError,
    ParameterError,
    RegimeError,
    SimulationError,
    ToleranceError,
)
from .model import (
    INFINITE,
    ModelParams,
    Regime,
    ScaledParams,
    SystemState,
    classify_regime,
    equilibrium_point,
    free_capacity,
    in_domain_S,
    is_infinite,
    rho,
)
from .paths import NOT_HIT, GridPath, OccupationQuery, Path, TransitionKind
from .simulate import (
    enabled_transitions,
    hitting_time_T1,
    initial_state_from_scaled,
    occupation_measure,
    scaled_state,
    simulate_grid,
    simulate_path,
    simulate_replicas,
    windowed_m_histogram,
)
from .fluid import (
    FluidTrajectory,
    boundary_drift,
    boundary_fixed_point,
    boundary_solution,
    fluid_trajectory,
    hitting_time_T0,
    interior_solution,
)
from .skorokhod import CORNER_STALL, ReflectedSolution, SkorokhodData, reflect_1d, solve_2d
from .fastchain import (
    FastChainDistribution,
    fast_rates,
    generating_function,
    pi_heads,
    simulate_fast_chain,
    stationary_distribution,
    total_variation,
    y_star,
)
from .martingales import (
    DriftTestReport,
    MartingaleFunctional,
    drift_test,
    exp_hitting_identity,
    gc_martingale,
    harmonic_residual,
    linear_martingale,
    negative_control,
    phi_c,
    poisson_charlier,
    psi_coefficient,
    quadratic_martingale,
    sample_hitting_times,
    variance_scaling_check,
)
from .diffusion import (
    CenteredPath,
    centered_critical,
    centered_underloaded,
    drift_matrix_fit,
    empirical_drift_diffusion,
    stationary_variance,
)
from .kernel import BACKEND
