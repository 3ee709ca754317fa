"""Optimal controls for the surplus problem and the scheme's allocation.

The unconstrained problem is solved in terms of the surplus Y = F + D - G.
Its optimal holdings are proportional to Y with coefficients that depend on
time only; they are then translated back to scheme holdings by adding the
guarantee-leg replication and subtracting the contribution-leg replication.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import AffineCurves
from .errors import ValidationError
from .replication import ContributionLeg, GuaranteeLeg
from .riccati import RiccatiSolution

__all__ = [
    "Allocation",
    "SurplusControls",
    "control_fractions",
    "optimal_surplus_controls",
    "optimal_allocation",
]


@dataclass(frozen=True)
class SurplusControls:
    """Optimal currency holdings for the surplus portfolio."""

    aYB: float
    aYL: float
    aYS: float
    aY0: float


@dataclass(frozen=True)
class Allocation:
    """Scheme holdings (currency) and weights (fractions of fund wealth)."""

    alpha_B: float
    alpha_L: float
    alpha_S: float
    alpha_0: float
    w_B: float
    w_L: float
    w_S: float
    w_0: float


def control_fractions(t, sol: RiccatiSolution, curves: AffineCurves):
    """Per-unit-of-surplus holdings (uB, uL, uS) at date(s) t.

    Deterministic functions of time: the state dependence of the market
    drifts and volatilities cancels in the first-order condition.
    """
    p = sol.params
    st, rt, mo = p.stock, p.rate, p.mortality
    g = p.scheme.gamma
    f1_B = float(curves.f1(p.scheme.T_B))
    f1_L = float(curves.f1(p.scheme.T_L))
    h1_L = float(curves.h1(p.scheme.T_L))
    A1 = sol.A1(t)
    A2 = sol.A2(t)
    uS = st.theta_S / (g * st.sigma_S)
    uL = -(mo.theta_lambda + mo.sigma_lambda * A2) / (g * mo.sigma_lambda * h1_L)
    uB = (st.theta_S * st.sigma_S_r - rt.theta_r * st.sigma_S - st.sigma_S * rt.sigma_r * A1) / (
        g * st.sigma_S * rt.sigma_r * f1_B
    ) - (f1_L / f1_B) * uL
    if np.ndim(uB):
        uS = np.full_like(uB, uS)
    return uB, uL, uS


def optimal_surplus_controls(
    y: float, t: float, sol: RiccatiSolution, curves: AffineCurves
) -> SurplusControls:
    """Optimal surplus holdings at (t, y).

    Raises
    ------
    ValidationError
        If y <= 0 or t lies outside [0, T].
    """
    if y <= 0:
        raise ValidationError(f"surplus controls require y > 0, got {y}")
    if t > sol.params.scheme.T + 1e-12:
        raise ValidationError(f"t must not exceed the horizon, got {t}")
    uB, uL, uS = control_fractions(float(t), sol, curves)
    aYB, aYL, aYS = float(uB) * y, float(uL) * y, float(uS) * y
    return SurplusControls(aYB=aYB, aYL=aYL, aYS=aYS, aY0=y - aYB - aYL - aYS)


def optimal_allocation(
    F: float,
    d_leg: ContributionLeg,
    g_leg: GuaranteeLeg,
    y: float,
    t: float,
    sol: RiccatiSolution,
    curves: AffineCurves,
) -> Allocation:
    """Scheme allocation: surplus controls plus leg replication adjustments.

    The bond holding subtracts the contribution-leg replication and adds the
    guarantee-leg replication; the longevity-bond holding adds the
    guarantee leg's; the stock holding is the surplus one unchanged.
    """
    if F <= 0:
        raise ValidationError(f"allocation requires F > 0, got {F}")
    sc = optimal_surplus_controls(y, t, sol, curves)
    alpha_B = sc.aYB - d_leg.alpha_B_D + g_leg.alpha_B_G
    alpha_L = sc.aYL + g_leg.alpha_L_G
    alpha_S = sc.aYS
    alpha_0 = F - alpha_B - alpha_L - alpha_S
    return Allocation(
        alpha_B=alpha_B,
        alpha_L=alpha_L,
        alpha_S=alpha_S,
        alpha_0=alpha_0,
        w_B=alpha_B / F,
        w_L=alpha_L / F,
        w_S=alpha_S / F,
        w_0=alpha_0 / F,
    )
