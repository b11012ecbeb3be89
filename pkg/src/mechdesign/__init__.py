"""Automated design of two-player winner-take mechanisms.

Solve for linear symmetric equilibria, estimate designer objectives by
Monte Carlo, and search a box of design parameters by simulated annealing.
"""

from .annealer import AllInfeasible, AnnealConfig, EvalReport, OptimizationResult, evaluate_candidate, optimize
from .design import DesignPoint, DesignSpace, Mechanism, RevenueRule
from .domains import (
    DOMAINS,
    VICIOUS_L,
    get_space,
    myerson_game,
    myerson_space,
    sga_equilibrium_oracle,
    sga_game,
    sga_space,
    vicious_game,
    vicious_space,
)
from .equilibrium import (
    DegenerateOpponent,
    EquilibriumResult,
    NonConcaveGame,
    SolverError,
    UnboundedBestResponse,
    best_response,
    expected_utility,
    is_bnic,
    solve_equilibrium,
)
from .evaluation import (
    ConstraintSpec,
    ObjectiveSpec,
    exante_gap,
    fairness_gap,
    ir_repair,
    revenue,
    samples_required,
    welfare,
    winner_utility,
)
from .game import AffineBranch, LinearStrategy, TypeSampler, WinnerTakeGame, payoff

__version__ = "0.1.0"
