"""Dirac quantum walks on regular and non-orthogonal lattices."""

from .coin_solver import (
    STANDARD_COINS,
    AffinePauliFactor,
    representation_transform,
    solve_sigma3_conjugation,
    solve_time_dilation,
)
from .engine import (
    SpinorField,
    dispersion,
    evolve,
    init_state,
    mean_position,
    random_state,
    site_probability,
    step,
    total_norm,
)
from .estimator import DiracQuantumWalk
from .exceptions import InfeasibleError, RankDeficientError, UnsupportedError
from .lattice import (
    FeasibilityReport,
    LatticeSpec,
    analyze_feasibility,
    cartesian_decomposition,
    make_lattice,
    normalization_constants,
)
from .reference import (
    ContinuumScenario,
    ConvergenceReport,
    convergence_study,
    dirac_exact_evolve,
    hamiltonian_symbol,
)
from .walk import (
    BUILDABLE,
    SCENARIOS,
    EMFieldSpec,
    WalkOperator,
    WalkStep,
    build_walk,
    consistency_residual,
    em_coin_at_site,
    make_walk,
    symbol,
)

__version__ = "0.1.0"
