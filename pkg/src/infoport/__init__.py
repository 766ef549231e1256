"""Risk-constrained utility maximization in a change-point market.

Simulates a one-asset market whose drift and volatility switch at a
random time, builds state-price densities under five information models,
solves the shortfall-constrained utility maximization by convex duality,
and prices the information gap between models by utility indifference.
"""

from .exceptions import (
    BracketFailure,
    ConfigError,
    DegenerateLikelihood,
    IllConditioned,
    Infeasible,
    InfoportError,
    NoConvergence,
    NonFinite,
    NonFiniteState,
    NoRoot,
    OrderViolation,
    OutOfRange,
    QuadratureFailure,
    Unattainable,
    UnsupportedEnlargement,
)
from .market import (
    ChangePointLaw,
    Coefficient,
    CoefficientSpec,
    MarketModel,
    PathBundle,
    SimGrid,
    lipschitz_report,
    sample_change_point,
    simulate_paths,
)
from .information import (
    ChangePointPosterior,
    CompensatedJump,
    DensityPath,
    FiltrationKind,
    MarketPriceOfRisk,
    RegimeIntervals,
    VolCase,
    change_point_filter,
    compensated_jump,
    density_path,
    detect_regime_intervals,
    market_price_of_risk,
)
from .preferences import (
    CombinedLagrangian,
    LossSpec,
    UtilitySpec,
    entropic_risk,
    exponential_loss,
    lagrangian_inverse,
    log_utility,
    loss_marginal_inverse_H,
    marginal_inverse_I,
    neg_reciprocal_loss,
    shifted_neg_reciprocal,
    shortfall_risk,
)
from .dual_solver import (
    DualSolution,
    EpsBounds,
    Scenario,
    StratumSolution,
    budget_curve,
    estimate_eps_bounds,
    risk_curve,
    solve_budget_multiplier,
    solve_dual,
)
from .wealth import (
    ClosedFormExample,
    StrategyPath,
    ValueReport,
    WealthPath,
    closed_form_example,
    optimal_terminal_wealth,
    orthogonality_check,
    regression_strategy,
    replicate,
    strategy_closed_form,
    value,
    value_of_solution,
    wealth_path_closed_form,
    wealth_path_regression,
)
from .indifference import IndifferenceResult, uiv_closed_form, uiv_root_solve

__version__ = "0.1.0"
