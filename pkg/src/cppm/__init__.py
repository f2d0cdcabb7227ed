"""Correlated posted-price mechanisms for online k-selection with a capped
number of price changes and a CVaR tail-risk objective."""

from .model import (
    Instance,
    MarketParams,
    PricingProfile,
    SeedOutcome,
    ValidationResult,
    WelfareDistribution,
    load_instance,
    load_profile,
    save_profile,
    validate,
    validate_profile,
)
from .pricing import (
    DesignRequest,
    check_static_lb_constraints,
    delay_exponential,
    design_delta_dynamic,
    design_fully_dynamic,
    design_risk_neutral,
    design_static_risk,
    solve_static_alpha,
)
from .mechanism import (
    FractionalTrace,
    run_cppm,
    run_d_dynamic,
    run_fractional,
    run_r_dynamic,
    run_r_static,
)
from .evaluation import (
    RatioReport,
    cvar,
    cvar_cr,
    cvar_cr_hard_family,
    hard_instance,
    monte_carlo_distribution,
    offline_opt,
    verify_lemma,
    welfare_distribution,
)

__version__ = "0.1.0"
