"""Vegetation-autotoxicity cross-diffusion toolkit.

A biomass-toxicity reaction-diffusion model in two equivalent guises (a
fast-switching three-species system and its cross-diffusion limit), with
closed-form equilibria, pattern-onset thresholds, 1D/2D finite-difference
simulation and pseudo-arclength continuation of steady-state branches.
"""

__version__ = "0.1.0"

from .equilibria import (
    Equilibrium,
    EquilibriumKind,
    Jacobian2,
    classify_equilibria,
    coexistence_equilibrium,
    jacobian_homogeneous,
    trivial_equilibrium,
)
from .errors import (
    BlowUpError,
    ConfigError,
    ContinuationError,
    DomainError,
    NewtonError,
    NumericalError,
    ParameterError,
    VegtoxError,
)
from .model import (
    HomogeneousState,
    ModelParams,
    carrying_capacity,
    derive_T_hat,
    propagation_coefficient,
    quasi_steady_split,
    reaction_fast,
    reaction_limit,
    theta,
    theta_prime,
)
from .solver import (
    Grid,
    SimConfig,
    State2,
    State3,
    TimeScheme,
    Trajectory,
    convergence_study,
    initial_condition_1d,
    initial_condition_2d,
    l1_norm,
    pattern_diagnostics,
    run,
    spot_diagnostics,
    split_state,
    stable_dt,
    step_fast,
    step_limit,
)
from .turing import (
    DispersionResult,
    RegionScan,
    characteristic_matrix,
    dispersion_relation,
    growth_rates,
    is_turing_unstable,
    mode_onset_sigma,
    neumann_laplacian_eigenvalues,
    restabilization_s,
    sigma_L,
    sigma_L0,
    turing_onset_sigma,
    turing_region_scan,
)
from .continuation import (
    Branch,
    ContinuationParameter,
    StepConfig,
    SteadyProblem,
    bifurcation_diagram,
    branch_switch,
    continue_branch,
    newton_solve,
    steady_residual,
)
