"""Affine bond and longevity-bond curves.

Zero-coupon bond prices are ``exp(f0 - f1*r)`` and longevity-bond prices are
``exp(-int_0^t lam) * exp(f0 - f1*r + h0 - h1*lam)``, where the exponent
coefficients solve scalar Riccati/linear ODEs with zero terminal conditions.
``f0``, ``f1`` and ``h1`` depend on (t, T) only through the time to maturity;
``h0`` also depends on the calendar date because the intensity drift level
grows with age.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import NumericsError, ValidationError
from .params import ModelParams, a_lambda, lambda0

__all__ = [
    "AffineCurves",
    "ReplicationWeights",
    "RiskPremiums",
]

# dense grid backing the exponential-kernel integral used by h0; spot-checked
# against adaptive quadrature to ~1e-12 relative accuracy in the test suite
_KERNEL_GRID_STEP = 0.005


@dataclass(frozen=True)
class RiskPremiums:
    """Instantaneous excess drifts of the three rolling instruments."""

    bond: float
    longevity_bond: float
    longevity_part: float
    stock: float


@dataclass(frozen=True)
class ReplicationWeights:
    """Fractions of a fixed-maturity longevity bond replicated by cash,
    rolling bond, and rolling longevity bond."""

    n0: float
    nB: float
    nL: float


class AffineCurves:
    """Closed-form curve coefficients and prices for one parameter set.

    Stateless after construction; safe for concurrent reads.
    """

    def __init__(self, params: ModelParams):
        self.params = params
        r, mo = params.rate, params.mortality
        self.b_tilde_r = r.b_r + r.theta_r * r.sigma_r
        self.eta_r = float(np.hypot(self.b_tilde_r, np.sqrt(2.0) * r.sigma_r))
        self.b_tilde_lambda = mo.b_lambda + mo.theta_lambda * mo.sigma_lambda
        self.eta_lambda = float(np.hypot(self.b_tilde_lambda, np.sqrt(2.0) * mo.sigma_lambda))
        self.lambda0 = lambda0(mo)
        # a_lambda(age) = b_lambda*phi + kappa * exp((age - m)/b)
        self._kappa = 1.0 / mo.b**2 + mo.b_lambda / mo.b
        self._age_factor = np.exp((mo.t0 - mo.m) / mo.b)
        horizon = params.numerics.guarantee_age_cap - mo.t0
        self._kernel = self._build_exp_kernel(horizon + 1.0)

    # -- coefficient functions (time to maturity tau = T - t) ---------------

    def f1(self, tau):
        """Bond duration coefficient; zero at tau = 0, increasing in tau."""
        e = np.expm1(self.eta_r * np.asarray(tau, dtype=float))
        return 2.0 * e / ((self.b_tilde_r + self.eta_r) * e + 2.0 * self.eta_r)

    def f0(self, tau):
        tau = np.asarray(tau, dtype=float)
        e = np.expm1(self.eta_r * tau)
        br, er = self.b_tilde_r, self.eta_r
        return (2.0 * self.params.rate.a_r / self.params.rate.sigma_r**2) * (
            np.log(2.0 * er) + 0.5 * (br + er) * tau - np.log((br + er) * e + 2.0 * er)
        )

    def h1(self, tau):
        """Longevity-bond mortality-duration coefficient."""
        e = np.expm1(self.eta_lambda * np.asarray(tau, dtype=float))
        return 2.0 * e / ((self.b_tilde_lambda + self.eta_lambda) * e + 2.0 * self.eta_lambda)

    def h1_integral(self, tau):
        """Closed form of the running integral of h1 from 0 to tau."""
        tau = np.asarray(tau, dtype=float)
        e = np.expm1(self.eta_lambda * tau)
        bl, el = self.b_tilde_lambda, self.eta_lambda
        return -(2.0 / self.params.mortality.sigma_lambda**2) * (
            np.log(2.0 * el) + 0.5 * (bl + el) * tau - np.log((bl + el) * e + 2.0 * el)
        )

    def _build_exp_kernel(self, horizon: float) -> CubicSpline:
        # J(tau) = int_0^tau exp(-x/b) h1(x) dx via cumulative Simpson
        n = 2 * int(np.ceil(horizon / (2 * _KERNEL_GRID_STEP))) + 1
        x = np.linspace(0.0, horizon, n)
        y = np.exp(-x / self.params.mortality.b) * self.h1(x)
        dx = x[1] - x[0]
        cum = np.zeros_like(x)
        cum[2::2] = np.cumsum((y[0:-2:2] + 4.0 * y[1:-1:2] + y[2::2]) * dx / 3.0)
        cum[1::2] = cum[0:-1:2] + (y[0:-1:2] + y[1::2]) * dx / 2.0
        return CubicSpline(x, cum)

    def h0(self, t, T):
        """Age-dependent longevity-bond exponent coefficient.

        Equals ``-int_t^T a_lam(t0 + u) h1(u, T) du``; evaluated through an
        exact split into the h1 running integral (closed form) and an
        exponential-kernel convolution (dense precomputed table).
        """
        mo = self.params.mortality
        T = np.asarray(T, dtype=float)
        tau = T - t
        if np.any(tau < -1e-12):
            raise ValidationError(f"h0 requires T >= t, got t={t}, T={T}")
        tau = np.maximum(tau, 0.0)
        if np.any(tau > self._kernel.x[-1]):
            # beyond the precomputed kernel table: integrate directly
            flat = np.atleast_1d(np.asarray(T, dtype=float))
            out = np.array([self.h0_quad(t, float(Ti)) for Ti in flat])
            return out if np.ndim(T) else float(out[0])
        gm_tail = self._kappa * self._age_factor * np.exp((t + tau) / mo.b)
        return -mo.b_lambda * mo.phi * self.h1_integral(tau) - gm_tail * self._kernel(tau)

    def h0_quad(self, t: float, T: float) -> float:
        """Direct adaptive-quadrature evaluation of h0 (reference path)."""
        if T < t:
            raise ValidationError(f"h0 requires T >= t, got t={t}, T={T}")
        mo = self.params.mortality
        val, _ = quad(
            lambda u: a_lambda(mo, mo.t0 + u) * float(self.h1(T - u)),
            t,
            T,
            epsrel=self.params.numerics.quad_rel_tol,
            limit=200,
        )
        return -val

    def h_coefficients(self, t: float, T: float) -> tuple[float, float]:
        """(h0, h1) for a contract written at t maturing at T."""
        return float(self.h0(t, np.asarray(T, dtype=float))), float(self.h1(T - t))

    # -- prices --------------------------------------------------------------

    def bond_price(self, r: float, t: float, T: float):
        """Zero-coupon bond price exp(f0 - f1*r)."""
        if np.any(np.asarray(T) < t):
            raise ValidationError(f"bond_price requires T >= t, got t={t}, T={T}")
        tau = np.asarray(T, dtype=float) - t
        return np.exp(self.f0(tau) - self.f1(tau) * r)

    def survival_factor(self, lam: float, t: float, T: float):
        """Risk-adjusted expected survival exp(h0 - h1*lam) from t to T."""
        tau = np.asarray(T, dtype=float) - t
        return np.exp(self.h0(t, T) - self.h1(tau) * lam)

    def longevity_bond_price(self, r: float, lam: float, cum_lambda: float, t: float, T: float):
        """Zero-coupon longevity bond price.

        ``cum_lambda`` is the realised integral of the intensity from 0 to t,
        so ``exp(-cum_lambda)`` is the survival index of the reference
        population at t.
        """
        if cum_lambda < 0:
            raise ValidationError(f"cum_lambda must be >= 0, got {cum_lambda}")
        return np.exp(-cum_lambda) * self.bond_price(r, t, T) * self.survival_factor(lam, t, T)

    # -- diffusion loadings and premiums --------------------------------------

    def sigma_B(self, r, tau):
        """Rolling-bond diffusion loading on W1 (non-positive for r >= 0)."""
        return -self.f1(tau) * self.params.rate.sigma_r * np.sqrt(r)

    def sigma_L_r(self, r, tau):
        return -self.f1(tau) * self.params.rate.sigma_r * np.sqrt(r)

    def sigma_L_lambda(self, lam, tau):
        return -self.h1(tau) * self.params.mortality.sigma_lambda * np.sqrt(lam)

    def risk_premiums(self, r: float, lam: float, t: float = 0.0) -> RiskPremiums:
        """Excess drifts of the rolling bond, rolling longevity bond, stock.

        The rolling instruments have constant times to maturity, so the
        premiums depend on t only through the state (r, lam).
        """
        p = self.params
        bond = -self.f1(p.scheme.T_B) * p.rate.sigma_r * p.rate.theta_r * r
        rate_part = -self.f1(p.scheme.T_L) * p.rate.sigma_r * p.rate.theta_r * r
        lon_part = (
            -self.h1(p.scheme.T_L) * p.mortality.sigma_lambda * p.mortality.theta_lambda * lam
        )
        stock = p.rate.theta_r * p.stock.sigma_S_r * r + p.stock.theta_S * p.stock.sigma_S
        return RiskPremiums(
            bond=float(bond),
            longevity_bond=float(rate_part + lon_part),
            longevity_part=float(lon_part),
            stock=float(stock),
        )

    def replication_weights(self, t: float, T_fix: float) -> ReplicationWeights:
        """Replication of a fixed-maturity longevity bond by the rolling pair.

        The sqrt-state factors in the diffusion loadings cancel in the
        ratios, so the weights are state-free.
        """
        if T_fix < t:
            raise ValidationError(f"replication requires T_fix >= t, got t={t}, T_fix={T_fix}")
        p = self.params
        h1_roll = float(self.h1(p.scheme.T_L))
        f1_roll = float(self.f1(p.scheme.T_B))
        if h1_roll == 0.0 or f1_roll == 0.0:
            raise NumericsError("degenerate rolling maturity: zero duration denominator")
        tau = T_fix - t
        nL = float(self.h1(tau)) / h1_roll
        nB = float(self.f1(tau)) / f1_roll - nL * float(self.f1(p.scheme.T_L)) / f1_roll
        return ReplicationWeights(n0=1.0 - nB - nL, nB=nB, nL=nL)
