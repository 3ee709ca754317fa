"""Experiment harness: base run, parameter sweeps, CSV output, and reports.

Sweeps reuse the base scenario's seed so that every swept value sees the
same Brownian paths; ordering comparisons across values are then pointwise
rather than only in expectation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .curves import AffineCurves
from .errors import LongevityHedgeError, ValidationError
from .params import ModelParams, check_gamma_condition, lambda0
from .simulate import EnsembleSummary, run_ensemble

__all__ = [
    "SweepSpec",
    "SweepResult",
    "SWEEPABLE",
    "apply_sweep_value",
    "run_base",
    "run_sweep",
    "emit_report",
    "write_ensemble_csv",
    "write_paths_csv",
]

# (owning section, field name) per sweepable parameter
SWEEPABLE = {
    "gamma": ("scheme", "gamma"),
    "theta_lambda": ("mortality", "theta_lambda"),
    "T_L": ("scheme", "T_L"),
    "r_c": ("scheme", "r_c"),
    "r_w": ("scheme", "r_w"),
}

# Published reference values for the packaged base scenario, with the
# tolerance each is held to in the report.
_PREMIUM_ANCHORS = {"bond": 0.01370, "longevity_bond": 0.01372, "stock": 0.01670}
_PREMIUM_ABS_TOL = 1e-4
_THETA_PREMIUM_ANCHORS = {
    -0.06: 1.1778e-5,
    -0.08: 1.5703e-5,
    -0.12: 2.3555e-5,
    -0.14: 2.7841e-5,
}
_THETA_PREMIUM_REL_TOL = 0.01
_INV_H1_ANCHORS = {
    5.0: 0.594886,
    10.0: 0.560673,
    15.0: 0.558716,
    20.0: 0.558597,
    25.0: 0.558590,
}
_INV_H1_ABS_TOL = 1e-5
_TERMINAL_WL_ANCHOR = 0.6644
_TERMINAL_WL_ABS_TOL = 0.05


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep around a base scenario."""

    parameter: str
    values: tuple
    base: ModelParams

    def __post_init__(self) -> None:
        if self.parameter not in SWEEPABLE:
            raise ValidationError(
                f"unknown sweep parameter {self.parameter!r}; "
                f"choose one of {sorted(SWEEPABLE)}"
            )
        if not self.values:
            raise ValidationError("sweep needs at least one value")


@dataclass
class SweepResult:
    spec: SweepSpec
    summaries: dict  # value -> EnsembleSummary
    failures: dict  # value -> error message
    files: list


def apply_sweep_value(base: ModelParams, parameter: str, value: float) -> ModelParams:
    """Base scenario with one parameter replaced (validation re-runs)."""
    section, fieldname = SWEEPABLE[parameter]
    group = replace(getattr(base, section), **{fieldname: value})
    return replace(base, **{section: group})


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def write_ensemble_csv(summary: EnsembleSummary, path) -> Path:
    path = Path(path)
    cols = ["wB", "wL", "wS", "w0", "YoverF"]
    header = ["t"]
    for c in cols:
        header += [f"mean_{c}", f"se_{c}"]
    lines = [",".join(header)]
    for i, t in enumerate(summary.t_grid):
        row = [_fmt(t)]
        for c in cols:
            row += [_fmt(summary.means[c][i]), _fmt(summary.ses[c][i])]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_paths_csv(summary: EnsembleSummary, path) -> Path:
    if summary.paths is None:
        raise ValidationError("ensemble was run without per-path storage")
    path = Path(path)
    cols = ["r", "lambda", "p", "Y", "D", "G", "F", "wB", "wL", "wS", "w0"]
    lines = [",".join(["path_id", "t"] + cols)]
    n_records, n_paths = summary.paths["Y"].shape
    for k in range(n_paths):
        for i, t in enumerate(summary.t_grid):
            row = [str(k), _fmt(t)] + [_fmt(summary.paths[c][i, k]) for c in cols]
            lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _write_comparison_csv(parameter: str, summaries: dict, path) -> Path:
    path = Path(path)
    cols = ["wB", "wL", "wS", "w0", "YoverF"]
    header = ["param", "param_value", "t"]
    for c in cols:
        header += [f"mean_{c}", f"se_{c}"]
    lines = [",".join(header)]
    for value in sorted(summaries):
        sm = summaries[value]
        for i, t in enumerate(sm.t_grid):
            row = [parameter, _fmt(value), _fmt(t)]
            for c in cols:
                row += [_fmt(sm.means[c][i]), _fmt(sm.ses[c][i])]
            lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


def run_base(
    params: ModelParams,
    out_dir,
    *,
    workers: int = 1,
    store_paths: bool = False,
    svg: bool = False,
):
    """Run the base ensemble and write ensemble.csv plus a summary report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = run_ensemble(params, workers=workers, store_paths=store_paths)
    files = [write_ensemble_csv(summary, out / "ensemble.csv")]
    if store_paths:
        files.append(write_paths_csv(summary, out / "paths.csv"))
    report = emit_report(params, summary, sweeps=())
    report_path = out / "report.md"
    report_path.write_text(report, encoding="utf-8")
    files.append(report_path)
    if svg:
        from .figures import save_ensemble_figure

        files.append(save_ensemble_figure(summary, out / "ensemble.svg"))
    return summary, files


def run_sweep(
    spec: SweepSpec,
    out_dir,
    *,
    workers: int = 1,
    svg: bool = False,
) -> SweepResult:
    """Run the ensemble for each sweep value with common random numbers.

    Values that fail validation are reported in ``failures``; the remaining
    values still run.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries: dict = {}
    failures: dict = {}
    files: list = []
    for value in spec.values:
        try:
            scenario = apply_sweep_value(spec.base, spec.parameter, float(value))
            summaries[float(value)] = run_ensemble(scenario, workers=workers)
        except LongevityHedgeError as exc:
            failures[float(value)] = str(exc)
            continue
        files.append(
            write_ensemble_csv(
                summaries[float(value)],
                out / f"ensemble_{spec.parameter}_{value:g}.csv",
            )
        )
    if summaries:
        files.append(
            _write_comparison_csv(
                spec.parameter, summaries, out / f"comparison_{spec.parameter}.csv"
            )
        )
    result = SweepResult(spec=spec, summaries=summaries, failures=failures, files=files)
    report_path = out / f"report_{spec.parameter}.md"
    report_path.write_text(
        emit_report(spec.base, None, sweeps=(result,)), encoding="utf-8"
    )
    files.append(report_path)
    if svg and summaries:
        from .figures import save_sweep_figure

        files.append(save_sweep_figure(result, out / f"sweep_{spec.parameter}.svg"))
    return result


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


def _check_row(name, computed, expected, tol, mode) -> str:
    if mode == "abs":
        ok = abs(computed - expected) <= tol
        detail = f"abs diff {abs(computed - expected):.3g} (tol {tol:g})"
    else:
        ok = abs(computed / expected - 1.0) <= tol
        detail = f"rel diff {abs(computed / expected - 1.0):.3g} (tol {tol:g})"
    flag = "pass" if ok else "FAIL"
    return f"| {name} | {computed:.6g} | {expected:.6g} | {detail} | {flag} |"


def emit_report(
    params: ModelParams,
    base_summary: EnsembleSummary | None,
    sweeps=(),
) -> str:
    """Markdown report: scenario diagnostics and anchor checks.

    Anchor rows compare computed quantities against the published reference
    values for the packaged base scenario at the tolerances used by the
    acceptance suite.
    """
    curves = AffineCurves(params)
    cond = check_gamma_condition(params)
    lam0 = lambda0(params.mortality)
    prem = curves.risk_premiums(params.rate.r0, lam0)

    lines = ["# Scenario report", "", "## Diagnostics", ""]
    lines.append(f"- lambda0 = {lam0:.8g}")
    lines.append(
        f"- gamma = {params.scheme.gamma:g}, admissible bound = {cond.bound:.6g} "
        f"({'ok' if cond.ok else 'VIOLATED'})"
    )
    lines.append(f"- rate Feller margin 2*a_r - sigma_r^2 = {params.rate.feller_margin:.6g}")
    lines.append(
        f"- mortality positivity margin at t0 = {params.mortality.feller_margin:.6g}"
    )
    lines.append(
        f"- contribution c = {params.scheme.contribution:g}, "
        f"instalment pi = {params.scheme.instalment:g}"
    )
    if base_summary is not None:
        lines.append(
            f"- D(0) = {base_summary.D0:.6f}, G(0) = {base_summary.G0:.6f}, "
            f"Y(0) = {base_summary.Y0:.6f}"
        )
        lines.append(
            f"- terminal surplus mean = {base_summary.terminal_Y_mean:.4f} "
            f"(se {base_summary.terminal_Y_se:.4f}), "
            f"terminal utility mean = {base_summary.terminal_utility_mean:.6g} "
            f"(se {base_summary.terminal_utility_se:.3g})"
        )
    lines += ["", "## Anchor checks", ""]
    lines.append("| quantity | computed | reference | deviation | status |")
    lines.append("|---|---|---|---|---|")
    lines.append(
        _check_row("bond premium(0)", prem.bond, _PREMIUM_ANCHORS["bond"], _PREMIUM_ABS_TOL, "abs")
    )
    lines.append(
        _check_row(
            "longevity bond premium(0)",
            prem.longevity_bond,
            _PREMIUM_ANCHORS["longevity_bond"],
            _PREMIUM_ABS_TOL,
            "abs",
        )
    )
    lines.append(
        _check_row("stock premium(0)", prem.stock, _PREMIUM_ANCHORS["stock"], _PREMIUM_ABS_TOL, "abs")
    )
    if params.mortality.theta_lambda == 0.0:
        lines.append(
            f"| longevity premium part (theta_lambda=0) | {prem.longevity_part:.6g} "
            f"| 0 | exact | {'pass' if prem.longevity_part == 0 else 'FAIL'} |"
        )

    if base_summary is not None and base_summary.means:
        lines.append(
            _check_row(
                "mean w_L at retirement",
                float(base_summary.means["wL"][-1]),
                _TERMINAL_WL_ANCHOR,
                _TERMINAL_WL_ABS_TOL,
                "abs",
            )
        )

    for sweep in sweeps:
        param = sweep.spec.parameter
        lines += ["", f"## Sweep: {param}", ""]
        if sweep.failures:
            for value, msg in sweep.failures.items():
                lines.append(f"- value {value:g} failed validation: {msg}")
        lines.append("| quantity | computed | reference | deviation | status |")
        lines.append("|---|---|---|---|---|")
        for value in sorted(sweep.summaries):
            scenario = apply_sweep_value(sweep.spec.base, param, value)
            cv = AffineCurves(scenario)
            if param == "theta_lambda" and value in _THETA_PREMIUM_ANCHORS:
                pr = cv.risk_premiums(scenario.rate.r0, lambda0(scenario.mortality))
                lines.append(
                    _check_row(
                        f"longevity premium part ({param}={value:g})",
                        pr.longevity_part,
                        _THETA_PREMIUM_ANCHORS[value],
                        _THETA_PREMIUM_REL_TOL,
                        "rel",
                    )
                )
            elif param == "T_L" and value in _INV_H1_ANCHORS:
                inv_h1 = 1.0 / float(cv.h1(value))
                lines.append(
                    _check_row(
                        f"1/h1 ({param}={value:g})",
                        inv_h1,
                        _INV_H1_ANCHORS[value],
                        _INV_H1_ABS_TOL,
                        "abs",
                    )
                )
            else:
                sm = sweep.summaries[value]
                lines.append(
                    f"| terminal mean w_L ({param}={value:g}) | "
                    f"{float(sm.means['wL'][-1]):.6g} | - | - | info |"
                )
    return "\n".join(lines) + "\n"
