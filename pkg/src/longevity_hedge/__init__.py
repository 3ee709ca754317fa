"""Pricing of longevity-linked instruments and closed-form optimal investment
for a defined-contribution pension scheme with a lifetime-annuity guarantee.

The market has a square-root short rate, a square-root mortality intensity
anchored to a Gompertz-Makeham age profile, a stock, a rolling bond, and a
rolling longevity bond.  The scheme invests contributions to beat the price
of a lifetime annuity at retirement; the optimal strategy is known in closed
form and is reproduced here together with a Monte Carlo experiment harness.
"""

from .curves import AffineCurves, ReplicationWeights, RiskPremiums
from .errors import LongevityHedgeError, NumericsError, ValidationError
from .experiments import SweepSpec, apply_sweep_value, emit_report, run_base, run_sweep
from .params import (
    GammaCondition,
    ModelParams,
    MortalityParams,
    NumericsParams,
    RateParams,
    SchemeParams,
    StockParams,
    a_lambda,
    base_scenario,
    check_gamma_condition,
    gompertz_makeham_force,
    lambda0,
    load_scenario,
    save_scenario,
)
from .replication import ContributionLeg, GuaranteeLeg, LegCalculator
from .riccati import RiccatiSolution, solve_riccati, value_function, verify_riccati_ode
from .simulate import (
    EnsembleSummary,
    run_ensemble,
    sample_cir_exact,
    simulate_state_step,
    simulate_surplus_step,
)
from .strategy import (
    Allocation,
    SurplusControls,
    control_fractions,
    optimal_allocation,
    optimal_surplus_controls,
)

__version__ = "0.1.0"

__all__ = [
    "AffineCurves",
    "Allocation",
    "ContributionLeg",
    "EnsembleSummary",
    "GammaCondition",
    "GuaranteeLeg",
    "LegCalculator",
    "LongevityHedgeError",
    "ModelParams",
    "MortalityParams",
    "NumericsError",
    "NumericsParams",
    "RateParams",
    "ReplicationWeights",
    "RiccatiSolution",
    "RiskPremiums",
    "SchemeParams",
    "StockParams",
    "SurplusControls",
    "SweepSpec",
    "ValidationError",
    "a_lambda",
    "apply_sweep_value",
    "base_scenario",
    "check_gamma_condition",
    "control_fractions",
    "emit_report",
    "gompertz_makeham_force",
    "lambda0",
    "load_scenario",
    "optimal_allocation",
    "optimal_surplus_controls",
    "run_base",
    "run_ensemble",
    "run_sweep",
    "sample_cir_exact",
    "save_scenario",
    "simulate_state_step",
    "simulate_surplus_step",
    "solve_riccati",
    "value_function",
    "verify_riccati_ode",
]
