"""Present values and replicating portfolios for the scheme's two legs.

The contribution leg is the value of the remaining contribution flow until
retirement; it carries only interest-rate risk and is replicated by the
rolling bond plus cash.  The guarantee leg is the value of the lifetime
annuity the member must be able to buy at retirement; it carries both
interest-rate and longevity risk and additionally needs the rolling
longevity bond.

All integrals over maturities use fixed composite Gauss-Legendre panels so
that per-path, per-step evaluations reduce to a weighted sum of exponentials
of the affine coefficients; panel density is validated against adaptive
quadrature in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import AffineCurves
from .errors import NumericsError, ValidationError
from .params import ModelParams

__all__ = ["ContributionLeg", "GuaranteeLeg", "LegCalculator", "StepCoefficients"]

_TAIL_BOUND = 1e-12  # integrand at the age cap must be below this times G


@dataclass(frozen=True)
class ContributionLeg:
    """Value and replication of the remaining contribution flow."""

    D: float
    alpha_B_D: float
    alpha_0_D: float


@dataclass(frozen=True)
class GuaranteeLeg:
    """Value and replication of the minimum guarantee."""

    G: float
    alpha_L_G: float
    alpha_B_G: float
    alpha_0_G: float
    annuity_a: float


@dataclass(frozen=True)
class StepCoefficients:
    """Precomputed quadrature nodes and affine coefficients for one date."""

    t: float
    d_weights: np.ndarray
    d_f0: np.ndarray
    d_f1: np.ndarray
    g_weights: np.ndarray
    g_f0: np.ndarray
    g_f1: np.ndarray
    g_h0: np.ndarray
    g_h1: np.ndarray
    tail_f0: float
    tail_f1: float
    tail_h0: float
    tail_h1: float


def _gauss_legendre_panels(lo: float, hi: float, per_year: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with roughly one panel per year."""
    if hi <= lo:
        return np.empty(0), np.empty(0)
    n_panels = max(1, int(np.ceil(hi - lo)))
    edges = np.linspace(lo, hi, n_panels + 1)
    x, w = np.polynomial.legendre.leggauss(per_year)
    half = (edges[1:] - edges[:-1])[:, None] / 2.0
    mid = (edges[1:] + edges[:-1])[:, None] / 2.0
    return (mid + half * x[None, :]).ravel(), (half * w[None, :]).ravel()


class LegCalculator:
    """Leg pricing bound to one parameter set.

    Parameters
    ----------
    params : ModelParams
    curves : AffineCurves, optional
        Reuse an existing curve object (it carries a precomputed kernel).
    nodes_per_year : int
        Gauss-Legendre points per one-year quadrature panel.
    """

    def __init__(self, params: ModelParams, curves: AffineCurves | None = None,
                 nodes_per_year: int = 6):
        self.params = params
        self.curves = curves if curves is not None else AffineCurves(params)
        self.nodes_per_year = nodes_per_year
        self.s_cap = params.numerics.guarantee_age_cap - params.mortality.t0
        self._g_nodes, self._g_weights = _gauss_legendre_panels(
            params.scheme.T, self.s_cap, nodes_per_year
        )
        self._f1_roll_B = float(self.curves.f1(params.scheme.T_B))
        self._f1_roll_L = float(self.curves.f1(params.scheme.T_L))
        self._h1_roll_L = float(self.curves.h1(params.scheme.T_L))

    # -- coefficient preparation ----------------------------------------------

    def coefficients(self, t: float) -> StepCoefficients:
        """Nodes, weights, and affine coefficients for evaluations at date t."""
        p = self.params
        if t > p.scheme.T + 1e-9:
            raise ValidationError(f"legs are defined for t <= T, got t={t}, T={p.scheme.T}")
        cv = self.curves
        sd, wd = _gauss_legendre_panels(t, p.scheme.T, self.nodes_per_year)
        taud = sd - t
        sg = self._g_nodes
        taug = sg - t
        return StepCoefficients(
            t=t,
            d_weights=wd,
            d_f0=np.asarray(cv.f0(taud), dtype=float),
            d_f1=np.asarray(cv.f1(taud), dtype=float),
            g_weights=self._g_weights,
            g_f0=np.asarray(cv.f0(taug), dtype=float),
            g_f1=np.asarray(cv.f1(taug), dtype=float),
            g_h0=np.asarray(cv.h0(t, sg), dtype=float),
            g_h1=np.asarray(cv.h1(taug), dtype=float),
            tail_f0=float(cv.f0(self.s_cap - t)),
            tail_f1=float(cv.f1(self.s_cap - t)),
            tail_h0=float(cv.h0(t, self.s_cap)),
            tail_h1=float(cv.h1(self.s_cap - t)),
        )

    # -- vectorised evaluation (hot path) -------------------------------------

    def contribution_arrays(self, co: StepCoefficients, r) -> tuple[np.ndarray, np.ndarray]:
        """(D, alpha_B_D) for an array of rates at date co.t."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if co.d_weights.size == 0:
            z = np.zeros_like(r)
            return z, z
        c = self.params.scheme.contribution
        prices = np.exp(co.d_f0[None, :] - co.d_f1[None, :] * r[:, None])
        D = c * prices @ co.d_weights
        alpha_B = c * (prices * co.d_f1[None, :]) @ co.d_weights / self._f1_roll_B
        return D, alpha_B

    def guarantee_arrays(
        self, co: StepCoefficients, r, lam, cum_lambda, instalment: float | None = None
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(G, alpha_L_G, alpha_B_G) for arrays of states at date co.t."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        cum = np.atleast_1d(np.asarray(cum_lambda, dtype=float))
        if np.any(cum < -1e-12):
            raise ValidationError("cum_lambda must be >= 0")
        pi = self.params.scheme.instalment if instalment is None else float(instalment)
        if pi == 0.0:
            z = np.zeros_like(r)
            return z, z, z
        survival = np.exp(-cum)
        n_values = np.exp(
            co.g_f0[None, :]
            - co.g_f1[None, :] * r[:, None]
            + co.g_h0[None, :]
            - co.g_h1[None, :] * lam[:, None]
        )
        G = pi * survival * (n_values @ co.g_weights)
        tail = pi * survival * np.exp(
            co.tail_f0 - co.tail_f1 * r + co.tail_h0 - co.tail_h1 * lam
        )
        bad = tail > _TAIL_BOUND * G
        if np.any(bad):
            i = int(np.argmax(bad))
            raise NumericsError(
                f"guarantee truncation bound violated at age cap: integrand "
                f"{tail[i]:.3e} vs limit {_TAIL_BOUND * G[i]:.3e} (r={r[i]:.4g}, "
                f"lam={lam[i]:.4g}, t={co.t:.4g})"
            )
        alpha_L = pi * survival * ((n_values * co.g_h1[None, :]) @ co.g_weights) / self._h1_roll_L
        alpha_B = (
            pi * survival * ((n_values * co.g_f1[None, :]) @ co.g_weights) / self._f1_roll_B
            - alpha_L * self._f1_roll_L / self._f1_roll_B
        )
        return G, alpha_L, alpha_B

    # -- scalar public operations ----------------------------------------------

    def contributions_pv(self, r: float, t: float) -> ContributionLeg:
        """Value of contributions still to be paid between t and retirement.

        Raises
        ------
        ValidationError
            If t exceeds the retirement date.
        """
        co = self.coefficients(t)
        D, alpha_B = self.contribution_arrays(co, r)
        return ContributionLeg(
            D=float(D[0]), alpha_B_D=float(alpha_B[0]), alpha_0_D=float(D[0] - alpha_B[0])
        )

    def guarantee_pv(
        self, r: float, lam: float, cum_lambda: float, t: float,
        instalment: float | None = None,
    ) -> GuaranteeLeg:
        """Value of the minimum guarantee and its replicating holdings.

        The annuity integral is truncated at the configured age cap; the
        neglected tail is asserted to be below 1e-12 of the total.
        """
        co = self.coefficients(t)
        G, alpha_L, alpha_B = self.guarantee_arrays(co, r, lam, cum_lambda, instalment)
        G0, aL, aB = float(G[0]), float(alpha_L[0]), float(alpha_B[0])
        return GuaranteeLeg(
            G=G0,
            alpha_L_G=aL,
            alpha_B_G=aB,
            alpha_0_G=G0 - aB - aL,
            annuity_a=G0 * float(np.exp(cum_lambda)),
        )

    def annuity_price(self, r: float, lam: float, instalment: float | None = None) -> float:
        """Lifetime annuity price at retirement for state (r, lam)."""
        leg = self.guarantee_pv(r, lam, 0.0, self.params.scheme.T, instalment)
        return leg.G
