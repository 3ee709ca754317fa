"""Closed-form solution of the reduced HJB equation.

The CRRA value function factorises as ``V(t, y, r, lam) =
y^(1-gamma)/(1-gamma) * exp(A0 + A1*r + A2*lam)`` where A1 and A2 solve
scalar Riccati equations with constant coefficients and A0 integrates the
inhomogeneous remainder.  All three vanish at the horizon.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import NumericsError, ValidationError
from .params import ModelParams, a_lambda, check_gamma_condition, riccati_discriminants

__all__ = ["RiccatiSolution", "solve_riccati", "verify_riccati_ode", "value_function"]


@dataclass
class RiccatiSolution:
    """Closed-form exponents of the value-function factor.

    ``A1(t)`` and ``A2(t)`` are ratios of exponentials in the time to go
    ``T - t``; ``A0(t)`` is obtained by adaptive quadrature on demand and
    cached per evaluation point.  Immutable in behaviour after construction.
    """

    params: ModelParams
    delta1: float
    delta2: float
    a11: float
    a12: float
    a21: float
    a22: float
    _a0_cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def horizon(self) -> float:
        return self.params.scheme.T

    def A1(self, t):
        """Rate exponent; 0 at t = T."""
        e = np.exp(-np.sqrt(self.delta1) * (self.horizon - np.asarray(t, dtype=float)))
        return self.a11 * self.a12 * (e - 1.0) / (self.a12 * e - self.a11)

    def A2(self, t):
        """Intensity exponent; 0 at t = T."""
        e = np.exp(-np.sqrt(self.delta2) * (self.horizon - np.asarray(t, dtype=float)))
        return self.a21 * self.a22 * (e - 1.0) / (self.a22 * e - self.a21)

    def _a0_integrand(self, s):
        p = self.params
        g = p.scheme.gamma
        return (
            p.rate.a_r * self.A1(s)
            + a_lambda(p.mortality, p.mortality.t0 + s) * self.A2(s)
            + (1.0 - g) / (2.0 * g) * p.stock.theta_S**2
        )

    def A0(self, t: float) -> float:
        """Inhomogeneous exponent, integrated from t to the horizon."""
        t = float(t)
        if t > self.horizon + 1e-12:
            raise ValidationError(f"A0 requires t <= T, got t={t}, T={self.horizon}")
        cached = self._a0_cache.get(t)
        if cached is not None:
            return cached
        val, _ = quad(
            self._a0_integrand,
            t,
            self.horizon,
            epsrel=self.params.numerics.quad_rel_tol,
            epsabs=1e-14,
            limit=200,
        )
        with self._lock:
            self._a0_cache[t] = val
        return val

    def g_factor(self, t: float, r: float, lam: float) -> float:
        """exp(A0 + A1*r + A2*lam); strictly positive."""
        return float(np.exp(self.A0(t) + self.A1(t) * r + self.A2(t) * lam))


def solve_riccati(p: ModelParams) -> RiccatiSolution:
    """Build the closed-form solution, checking existence conditions.

    Raises
    ------
    NumericsError
        If either discriminant is non-positive for the scenario's gamma, or
        if the closed form would hit a pole inside [0, T].
    """
    cond = check_gamma_condition(p)
    if cond.delta1 <= 0 or cond.delta2 <= 0:
        raise NumericsError(
            f"risk aversion gamma={p.scheme.gamma} is below the admissible bound "
            f"{cond.bound:.6g} (delta1={cond.delta1:.6g}, delta2={cond.delta2:.6g})"
        )
    r, mo, g = p.rate, p.mortality, p.scheme.gamma
    delta1, delta2 = riccati_discriminants(p)
    sq1, sq2 = np.sqrt(delta1), np.sqrt(delta2)
    a11 = ((g - 1.0) * r.theta_r * r.sigma_r + r.b_r * g + g * sq1) / r.sigma_r**2
    a12 = ((g - 1.0) * r.theta_r * r.sigma_r + r.b_r * g - g * sq1) / r.sigma_r**2
    a21 = (
        (g - 1.0) * mo.theta_lambda * mo.sigma_lambda + mo.b_lambda * g + g * sq2
    ) / mo.sigma_lambda**2
    a22 = (
        (g - 1.0) * mo.theta_lambda * mo.sigma_lambda + mo.b_lambda * g - g * sq2
    ) / mo.sigma_lambda**2
    sol = RiccatiSolution(
        params=p, delta1=float(delta1), delta2=float(delta2),
        a11=float(a11), a12=float(a12), a21=float(a21), a22=float(a22),
    )
    _assert_no_pole(sol.a11, sol.a12, sq1, p.scheme.T, "A1")
    _assert_no_pole(sol.a21, sol.a22, sq2, p.scheme.T, "A2")
    return sol


def _assert_no_pole(hi: float, lo: float, sq: float, T: float, label: str) -> None:
    # denominator lo*exp(-sq*tau) - hi vanishes at tau* = -log(hi/lo)/sq;
    # with roots of opposite sign (hi/lo < 0) no pole can occur
    ratio = hi / lo
    if ratio <= 0:
        return
    if ratio >= 1.0:
        return  # tau* <= 0, outside the horizon
    tau_star = -np.log(ratio) / sq
    if 0.0 < tau_star <= T:
        raise NumericsError(f"{label} closed form has a pole at time-to-go {tau_star:.4f}")


def riccati_ode_coefficients(p: ModelParams) -> tuple[tuple[float, float, float], ...]:
    """(c0, c1, c2) per equation, with A' = -(c0 + c1*A + c2*A^2)."""
    r, mo, g = p.rate, p.mortality, p.scheme.gamma
    row1 = (
        (1.0 - g) * (2.0 * g + r.theta_r**2) / (2.0 * g),
        ((1.0 - g) * r.theta_r * r.sigma_r - r.b_r * g) / g,
        r.sigma_r**2 / (2.0 * g),
    )
    row2 = (
        (1.0 - g) * mo.theta_lambda**2 / (2.0 * g),
        ((1.0 - g) * mo.theta_lambda * mo.sigma_lambda - mo.b_lambda * g) / g,
        mo.sigma_lambda**2 / (2.0 * g),
    )
    return row1, row2


def verify_riccati_ode(sol: RiccatiSolution, grid_n: int = 200) -> float:
    """Plug the closed forms into the three defining ODEs.

    Derivatives of the closed forms A1 and A2 are taken by central
    differences with step 1e-6 yr on a uniform grid over [0, T].  A0 is
    integral-defined, so its derivative uses a wider 0.05 yr step to keep
    the quadrature noise of the two endpoint evaluations far below the
    difference quotient.  Returns the maximum absolute residual across the
    three equations.
    """
    if grid_n < 2:
        raise ValidationError(f"grid_n must be >= 2, got {grid_n}")
    p = sol.params
    T = p.scheme.T
    h = 1e-6
    t = np.linspace(h, T - h, grid_n)
    (c10, c11, c12), (c20, c21, c22) = riccati_ode_coefficients(p)

    A1, dA1 = sol.A1(t), (sol.A1(t + h) - sol.A1(t - h)) / (2.0 * h)
    A2, dA2 = sol.A2(t), (sol.A2(t + h) - sol.A2(t - h)) / (2.0 * h)
    res1 = dA1 + c10 + c11 * A1 + c12 * A1**2
    res2 = dA2 + c20 + c21 * A2 + c22 * A2**2
    # A0'(t) = -(a_r A1 + a_lam A2 + (1-gamma)/(2 gamma) theta_S^2)
    h0 = min(0.05, T / 4.0)
    t0g = t[(t - h0 >= 0.0) & (t + h0 <= T)]
    a0p = np.array([sol.A0(float(ti + h0)) for ti in t0g])
    a0m = np.array([sol.A0(float(ti - h0)) for ti in t0g])
    res3 = (a0p - a0m) / (2.0 * h0) + sol._a0_integrand(t0g)
    return float(max(np.abs(res1).max(), np.abs(res2).max(), np.abs(res3).max()))


def value_function(y: float, r: float, lam: float, t: float, sol: RiccatiSolution) -> float:
    """CRRA value of surplus y at state (t, r, lam)."""
    if y <= 0:
        raise ValidationError(f"value_function requires y > 0, got {y}")
    g = sol.params.scheme.gamma
    return y ** (1.0 - g) / (1.0 - g) * sol.g_factor(t, r, lam)
