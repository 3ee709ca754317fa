"""Monte Carlo simulation of state and wealth under the optimal strategy.

The two square-root factors are stepped with the full-truncation Euler
scheme; the surplus is stepped in logs, which preserves the positivity the
optimal strategy guarantees in continuous time.  All three use the same
three-dimensional Brownian increments.

Every path owns a counter-based RNG stream keyed by (seed, path index), so
results are independent of how paths are partitioned across workers.  Paths
are processed in fixed-size blocks; aggregation sums block partials in block
order, which makes ensemble output bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curves import AffineCurves
from .errors import NumericsError, ValidationError
from .params import ModelParams, a_lambda, lambda0
from .replication import LegCalculator, StepCoefficients
from .riccati import RiccatiSolution, solve_riccati
from .strategy import control_fractions

__all__ = [
    "EnsembleSummary",
    "run_ensemble",
    "simulate_state_step",
    "simulate_surplus_step",
    "sample_cir_exact",
]

_BLOCK_SIZE = 64  # paths per work unit; fixed so partitioning never depends on workers
_Y_FLOOR = 1e-300

_SUMMARY_COLUMNS = ("wB", "wL", "wS", "w0", "YoverF")
_PATH_COLUMNS = ("r", "lambda", "p", "Y", "D", "G", "F", "wB", "wL", "wS", "w0")


def _path_generator(seed: int, path_index: int) -> np.random.Generator:
    key = np.array([seed, path_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_state_step(params: ModelParams, r, lam, t, dt, noise):
    """One full-truncation Euler step of (r, lam) plus the survival increment.

    ``noise`` holds the three standard normal increments of the step; the
    third component drives only the assets and is ignored here.  Returns
    (r', lam', d_cum) where d_cum is the trapezoidal increment of the
    intensity integral using truncated values.
    """
    noise = np.asarray(noise, dtype=float)
    z1, z2 = noise[..., 0], noise[..., 1]
    rp = np.maximum(r, 0.0)
    lp = np.maximum(lam, 0.0)
    sq = np.sqrt(dt)
    rt, mo = params.rate, params.mortality
    r_new = r + (rt.a_r - rt.b_r * rp) * dt + rt.sigma_r * np.sqrt(rp) * sq * z1
    drift = a_lambda(mo, mo.t0 + t) - mo.b_lambda * lp
    lam_new = lam + drift * dt + mo.sigma_lambda * np.sqrt(lp) * sq * z2
    d_cum = 0.5 * (lp + np.maximum(lam_new, 0.0)) * dt
    return r_new, lam_new, d_cum


def _market_terms(params: ModelParams, curves: AffineCurves, controls, r, lam):
    """Excess drift and W-loadings of the control portfolio per unit surplus."""
    uB, uL, uS = controls
    p = params
    sqrt_r = np.sqrt(np.maximum(r, 0.0))
    sqrt_lam = np.sqrt(np.maximum(lam, 0.0))
    f1_B = float(curves.f1(p.scheme.T_B))
    f1_L = float(curves.f1(p.scheme.T_L))
    h1_L = float(curves.h1(p.scheme.T_L))
    sig_B = -f1_B * p.rate.sigma_r * sqrt_r
    sig_Lr = -f1_L * p.rate.sigma_r * sqrt_r
    sig_Ll = -h1_L * p.mortality.sigma_lambda * sqrt_lam
    m_B = p.rate.theta_r * sqrt_r * sig_B
    m_L = p.rate.theta_r * sqrt_r * sig_Lr + p.mortality.theta_lambda * sqrt_lam * sig_Ll
    m_S = p.rate.theta_r * p.stock.sigma_S_r * np.maximum(r, 0.0) + p.stock.theta_S * p.stock.sigma_S
    excess = uB * m_B + uL * m_L + uS * m_S
    load1 = uB * sig_B + uL * sig_Lr + uS * p.stock.sigma_S_r * sqrt_r
    load2 = uL * sig_Ll
    load3 = uS * p.stock.sigma_S
    return excess, (load1, load2, load3)


def simulate_surplus_step(
    params: ModelParams,
    sol: RiccatiSolution,
    curves: AffineCurves,
    Y,
    r,
    lam,
    t,
    dt,
    noise,
    control_scale: float = 1.0,
    controls=None,
):
    """One log-Euler step of the surplus under the (possibly scaled) optimal
    control, driven by the same noise vector as the state step."""
    noise = np.asarray(noise, dtype=float)
    if controls is None:
        controls = control_fractions(t, sol, curves)
    uB, uL, uS = controls
    controls = (uB * control_scale, uL * control_scale, uS * control_scale)
    excess, (l1, l2, l3) = _market_terms(params, curves, controls, r, lam)
    rp = np.maximum(r, 0.0)
    quad = l1 * l1 + l2 * l2 + l3 * l3
    sq = np.sqrt(dt)
    dlog = (rp + excess - 0.5 * quad) * dt + (
        l1 * noise[..., 0] + l2 * noise[..., 1] + l3 * noise[..., 2]
    ) * sq
    return Y * np.exp(dlog)


def sample_cir_exact(gen: np.random.Generator, x0, a: float, b_speed: float,
                     sigma: float, dt: float, n_steps: int):
    """Exact square-root-diffusion transitions via noncentral chi-square.

    Valid for constant coefficients; used by the risk-neutral pricing
    oracles, where the drift is time-homogeneous.  Returns an array of
    shape (n_paths, n_steps + 1) including the initial value.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    out = np.empty((x0.size, n_steps + 1))
    out[:, 0] = x0
    decay = np.exp(-b_speed * dt)
    scale = sigma**2 * (1.0 - decay) / (4.0 * b_speed)
    df = 4.0 * a / sigma**2
    x = x0.copy()
    for i in range(n_steps):
        x = scale * gen.noncentral_chisquare(df, x * decay / scale)
        out[:, i + 1] = x
    return out


@dataclass
class EnsembleSummary:
    """Cross-path statistics of an ensemble run.

    ``means``/``ses`` map each of wB, wL, wS, w0, YoverF to arrays over the
    time grid.  Terminal surplus and utility statistics are scalars.
    """

    t_grid: np.ndarray
    n_paths: int
    dt: float
    seed: int
    means: dict
    ses: dict
    terminal_Y_mean: float
    terminal_Y_se: float
    terminal_utility_mean: float
    terminal_utility_se: float
    Y0: float
    D0: float
    G0: float
    terminal_Y: np.ndarray = field(repr=False, default=None)
    paths: dict | None = field(repr=False, default=None)


def _prepare_step_data(params, sol, curves, calc, t_grid, with_legs):
    controls = [control_fractions(float(t), sol, curves) for t in t_grid]
    coeffs = [calc.coefficients(float(t)) for t in t_grid] if with_legs else None
    return controls, coeffs


def _leg_values(calc: LegCalculator, co: StepCoefficients, r, lam, cum):
    D, aBD = calc.contribution_arrays(co, r)
    G, aLG, aBG = calc.guarantee_arrays(co, r, lam, cum)
    return D, aBD, G, aLG, aBG


def _run_block(
    params, sol, curves, calc, t_grid, controls, coeffs, Y0,
    block_start, block_size, control_scale, with_legs, store_paths,
):
    """Simulate one contiguous block of paths, time-major and vectorised."""
    p = params
    n_steps = len(t_grid) - 1
    dt = float(t_grid[1] - t_grid[0])
    noise = np.empty((n_steps, block_size, 3))
    for k in range(block_size):
        noise[:, k, :] = _path_generator(p.numerics.seed, block_start + k).standard_normal(
            (n_steps, 3)
        )

    r = np.full(block_size, p.rate.r0)
    lam = np.full(block_size, lambda0(p.mortality))
    cum = np.zeros(block_size)
    Y = np.full(block_size, Y0)

    n_records = n_steps + 1
    sums = np.zeros((n_records, 5)) if with_legs else None
    sumsq = np.zeros((n_records, 5)) if with_legs else None
    recorded = (
        {name: np.empty((n_records, block_size)) for name in _PATH_COLUMNS}
        if store_paths
        else None
    )

    for i in range(n_records):
        t = float(t_grid[i])
        rp = np.maximum(r, 0.0)
        lp = np.maximum(lam, 0.0)
        if with_legs:
            D, aBD, G, aLG, aBG = _leg_values(calc, coeffs[i], rp, lp, cum)
            F = Y - D + G
            uB, uL, uS = controls[i]
            aB = uB * control_scale * Y - aBD + aBG
            aL = uL * control_scale * Y + aLG
            aS = uS * control_scale * Y
            wB, wL, wS = aB / F, aL / F, aS / F
            w0 = 1.0 - wB - wL - wS
            step_stats = np.stack([wB, wL, wS, w0, Y / F], axis=1)
            sums[i] = step_stats.sum(axis=0)
            sumsq[i] = (step_stats**2).sum(axis=0)
            if store_paths:
                rec = recorded
                rec["r"][i], rec["lambda"][i], rec["p"][i] = rp, lp, np.exp(-cum)
                rec["Y"][i], rec["D"][i], rec["G"][i], rec["F"][i] = Y, D, G, F
                rec["wB"][i], rec["wL"][i], rec["wS"][i], rec["w0"][i] = wB, wL, wS, w0
        if i == n_steps:
            break
        zi = noise[i]
        Y = simulate_surplus_step(
            p, sol, curves, Y, r, lam, t, dt, zi, control_scale, controls=controls[i]
        )
        if np.any(Y < _Y_FLOOR):
            k = int(np.argmax(Y < _Y_FLOOR))
            raise NumericsError(
                f"surplus underflow on path {block_start + k} at t={t_grid[i + 1]:.4f}"
            )
        r, lam, d_cum = simulate_state_step(p, r, lam, t, dt, zi)
        cum = cum + d_cum

    return sums, sumsq, Y, recorded


def run_ensemble(
    params: ModelParams,
    *,
    workers: int = 1,
    control_scale: float = 1.0,
    with_legs: bool = True,
    store_paths: bool = False,
) -> EnsembleSummary:
    """Simulate the scheme under the optimal strategy and aggregate.

    Parameters
    ----------
    params : ModelParams
        Scenario; ``params.numerics`` fixes dt, path count, and seed.
    workers : int
        Worker threads.  Output is bit-identical for any value.
    control_scale : float
        Multiplies the optimal surplus controls (1.0 = optimal); used for
        suboptimality probes.
    with_legs : bool
        When False, only the surplus is simulated (no weights summary);
        terminal statistics remain available.
    store_paths : bool
        Keep full per-path trajectories (implies leg computation).

    Raises
    ------
    ValidationError
        If the initial surplus F0 + D(0) - G(0) is not positive.
    NumericsError
        If any path's surplus underflows.
    """
    if store_paths:
        with_legs = True
    p = params
    curves = AffineCurves(p)
    sol = solve_riccati(p)
    calc = LegCalculator(p, curves)

    n_steps = max(1, int(round(p.scheme.T / p.numerics.dt)))
    dt = p.scheme.T / n_steps  # grid includes 0 and T exactly
    t_grid = np.linspace(0.0, p.scheme.T, n_steps + 1)

    d0 = calc.contributions_pv(p.rate.r0, 0.0)
    g0 = calc.guarantee_pv(p.rate.r0, lambda0(p.mortality), 0.0, 0.0)
    Y0 = p.scheme.F0 + d0.D - g0.G
    if Y0 <= 0:
        raise ValidationError(
            f"initial surplus must be positive: F0 + D(0) - G(0) = {Y0:.6g}"
        )

    controls, coeffs = _prepare_step_data(p, sol, curves, calc, t_grid, with_legs)

    n_paths = p.numerics.n_paths
    starts = list(range(0, n_paths, _BLOCK_SIZE))
    blocks = [(s, min(_BLOCK_SIZE, n_paths - s)) for s in starts]

    def work(block):
        start, size = block
        return _run_block(
            p, sol, curves, calc, t_grid, controls, coeffs, Y0,
            start, size, control_scale, with_legs, store_paths,
        )

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]

    terminal_Y = np.concatenate([res[2] for res in results])
    g = p.scheme.gamma
    utility = terminal_Y ** (1.0 - g) / (1.0 - g)

    means: dict = {}
    ses: dict = {}
    if with_legs:
        total = np.sum([res[0] for res in results], axis=0)
        total_sq = np.sum([res[1] for res in results], axis=0)
        mean = total / n_paths
        if n_paths > 1:
            var = np.maximum(total_sq - n_paths * mean**2, 0.0) / (n_paths - 1)
            se = np.sqrt(var / n_paths)
        else:
            se = np.zeros_like(mean)
        for j, name in enumerate(_SUMMARY_COLUMNS):
            means[name] = mean[:, j]
            ses[name] = se[:, j]

    paths = None
    if store_paths:
        paths = {
            name: np.concatenate([res[3][name] for res in results], axis=1)
            for name in _PATH_COLUMNS
        }

    def _se(x):
        return float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0

    return EnsembleSummary(
        t_grid=t_grid,
        n_paths=n_paths,
        dt=dt,
        seed=p.numerics.seed,
        means=means,
        ses=ses,
        terminal_Y_mean=float(terminal_Y.mean()),
        terminal_Y_se=_se(terminal_Y),
        terminal_utility_mean=float(utility.mean()),
        terminal_utility_se=_se(utility),
        Y0=float(Y0),
        D0=float(d0.D),
        G0=float(g0.G),
        terminal_Y=terminal_Y,
        paths=paths,
    )
