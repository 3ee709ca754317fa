"""Model constants, validation, and scenario file I/O.

All quantities are annual: rates and intensities in 1/yr, volatilities in
1/sqrt(yr), times and maturities in years, money in currency units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ValidationError

__all__ = [
    "RateParams",
    "MortalityParams",
    "StockParams",
    "SchemeParams",
    "NumericsParams",
    "ModelParams",
    "GammaCondition",
    "base_scenario",
    "check_gamma_condition",
    "gompertz_makeham_force",
    "lambda0",
    "a_lambda",
    "load_scenario",
    "save_scenario",
]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


@dataclass(frozen=True)
class RateParams:
    """Square-root short-rate model constants.

    ``dr = (a_r - b_r r) dt + sigma_r sqrt(r) dW_1`` with market price of
    interest-rate risk ``theta_r sqrt(r)``.
    """

    a_r: float
    b_r: float
    sigma_r: float
    theta_r: float
    r0: float

    def __post_init__(self) -> None:
        _require(self.a_r > 0, f"rate.a_r must be > 0, got {self.a_r}")
        _require(self.b_r > 0, f"rate.b_r must be > 0, got {self.b_r}")
        _require(self.sigma_r > 0, f"rate.sigma_r must be > 0, got {self.sigma_r}")
        _require(self.r0 > 0, f"rate.r0 must be > 0, got {self.r0}")
        _require(
            2.0 * self.a_r > self.sigma_r**2,
            f"rate Feller condition violated: 2*a_r = {2 * self.a_r:.6g} "
            f"<= sigma_r^2 = {self.sigma_r**2:.6g}",
        )

    @property
    def feller_margin(self) -> float:
        return 2.0 * self.a_r - self.sigma_r**2


@dataclass(frozen=True)
class MortalityParams:
    """Square-root mortality-intensity model anchored to Gompertz-Makeham.

    ``dlam = (a_lam(age) - b_lambda lam) dt + sigma_lambda sqrt(lam) dW_2``
    where the drift level ``a_lam`` is chosen so that the expected intensity
    tracks the Gompertz-Makeham force of mortality at calendar age
    ``t0 + elapsed time``.  Market price of longevity risk is
    ``theta_lambda sqrt(lam)`` (negative in the base scenario).
    """

    b_lambda: float
    sigma_lambda: float
    theta_lambda: float
    phi: float
    m: float
    b: float
    t0: float

    def __post_init__(self) -> None:
        _require(self.b_lambda > 0, f"mortality.b_lambda must be > 0, got {self.b_lambda}")
        _require(
            self.sigma_lambda > 0,
            f"mortality.sigma_lambda must be > 0, got {self.sigma_lambda}",
        )
        _require(self.b > 0, f"mortality.b must be > 0, got {self.b}")
        _require(self.phi >= 0, f"mortality.phi must be >= 0, got {self.phi}")
        _require(self.t0 > 0, f"mortality.t0 must be > 0, got {self.t0}")
        lam0 = lambda0(self)
        _require(lam0 > 0, f"initial intensity must be > 0, got {lam0}")
        # a_lam is increasing in age, so the positivity condition
        # 2*a_lam(age) > sigma_lambda^2 holds everywhere iff it holds at t0.
        _require(
            2.0 * a_lambda(self, self.t0) > self.sigma_lambda**2,
            f"mortality positivity condition violated at age {self.t0}: "
            f"2*a_lam = {2 * a_lambda(self, self.t0):.6g} <= "
            f"sigma_lambda^2 = {self.sigma_lambda**2:.6g}",
        )

    @property
    def feller_margin(self) -> float:
        return 2.0 * a_lambda(self, self.t0) - self.sigma_lambda**2


@dataclass(frozen=True)
class StockParams:
    """Stock dynamics constants: idiosyncratic vol, rate-covariance loading,
    and market price of stock risk."""

    sigma_S: float
    sigma_S_r: float
    theta_S: float

    def __post_init__(self) -> None:
        _require(self.sigma_S > 0, f"stock.sigma_S must be > 0, got {self.sigma_S}")


@dataclass(frozen=True)
class SchemeParams:
    """Pension scheme constants.

    ``w`` is the constant instantaneous wage; the contribution flow is
    ``c = r_c * w`` and the annuity instalment is ``pi = r_w * w``.
    """

    w: float
    r_c: float
    r_w: float
    T: float
    T_B: float
    T_L: float
    F0: float
    gamma: float

    def __post_init__(self) -> None:
        _require(self.w > 0, f"scheme.w must be > 0, got {self.w}")
        _require(0 < self.r_c <= 1, f"scheme.r_c must be in (0, 1], got {self.r_c}")
        _require(0 < self.r_w <= 1, f"scheme.r_w must be in (0, 1], got {self.r_w}")
        _require(self.T > 0, f"scheme.T must be > 0, got {self.T}")
        _require(self.T_B > 0, f"scheme.T_B must be > 0, got {self.T_B}")
        _require(self.T_L > 0, f"scheme.T_L must be > 0, got {self.T_L}")
        _require(self.F0 > 0, f"scheme.F0 must be > 0, got {self.F0}")
        _require(self.gamma > 0, f"scheme.gamma must be > 0, got {self.gamma}")
        _require(self.gamma != 1, "scheme.gamma = 1 (log utility) is excluded")

    @property
    def contribution(self) -> float:
        """Instantaneous contribution flow c = r_c * w."""
        return self.r_c * self.w

    @property
    def instalment(self) -> float:
        """Instantaneous annuity instalment pi = r_w * w."""
        return self.r_w * self.w


@dataclass(frozen=True)
class NumericsParams:
    """Discretisation and quadrature settings."""

    dt: float = 1.0 / 52.0
    n_paths: int = 100
    seed: int = 1
    quad_rel_tol: float = 1e-9
    guarantee_age_cap: float = 130.0

    def __post_init__(self) -> None:
        _require(self.dt > 0, f"numerics.dt must be > 0, got {self.dt}")
        _require(self.n_paths >= 1, f"numerics.n_paths must be >= 1, got {self.n_paths}")
        _require(self.seed >= 0, f"numerics.seed must be >= 0, got {self.seed}")
        _require(
            0 < self.quad_rel_tol <= 1e-3,
            f"numerics.quad_rel_tol must be in (0, 1e-3], got {self.quad_rel_tol}",
        )


@dataclass(frozen=True)
class ModelParams:
    """Complete, validated parameter set for one scenario."""

    rate: RateParams
    mortality: MortalityParams
    stock: StockParams
    scheme: SchemeParams
    numerics: NumericsParams = field(default_factory=NumericsParams)

    def __post_init__(self) -> None:
        _require(
            self.numerics.guarantee_age_cap > self.mortality.t0 + self.scheme.T,
            f"numerics.guarantee_age_cap = {self.numerics.guarantee_age_cap} must "
            f"exceed retirement age {self.mortality.t0 + self.scheme.T}",
        )

    def with_numerics(self, **kwargs) -> "ModelParams":
        """Copy with selected numerics fields replaced."""
        return replace(self, numerics=replace(self.numerics, **kwargs))


def gompertz_makeham_force(mort: MortalityParams, age) -> np.ndarray | float:
    """Gompertz-Makeham force of mortality phi + exp((age - m)/b) / b."""
    return mort.phi + np.exp((np.asarray(age, dtype=float) - mort.m) / mort.b) / mort.b


def lambda0(mort: MortalityParams) -> float:
    """Initial mortality intensity: the Gompertz-Makeham force at age t0."""
    return float(gompertz_makeham_force(mort, mort.t0))


def a_lambda(mort: MortalityParams, age) -> np.ndarray | float:
    """Drift level of the intensity at a given calendar age.

    Chosen so that the expected intensity of a member aged ``t0`` at time 0
    equals the Gompertz-Makeham force at age ``t0 + t`` for all t >= 0.
    """
    age = np.asarray(age, dtype=float)
    exp_term = np.exp((age - mort.m) / mort.b) / mort.b
    return mort.b_lambda * (mort.phi + (1.0 / (mort.b_lambda * mort.b) + 1.0) * exp_term)


@dataclass(frozen=True)
class GammaCondition:
    """Risk-aversion bound diagnostics for the closed-form solution."""

    bound: float
    ok: bool
    rate_fraction: float
    mortality_fraction: float
    delta1: float
    delta2: float


def riccati_discriminants(p: ModelParams) -> tuple[float, float]:
    """Discriminants of the two scalar Riccati equations for the given gamma."""
    r, mo, g = p.rate, p.mortality, p.scheme.gamma
    k1 = 2 * r.sigma_r**2 + r.theta_r**2 * r.sigma_r**2 + 2 * r.b_r * r.theta_r * r.sigma_r
    k2 = 2 * mo.b_lambda * mo.theta_lambda * mo.sigma_lambda + (
        mo.theta_lambda * mo.sigma_lambda
    ) ** 2
    delta1 = r.b_r**2 + (g - 1.0) / g * k1
    delta2 = mo.b_lambda**2 + (g - 1.0) / g * k2
    return delta1, delta2


def check_gamma_condition(p: ModelParams) -> GammaCondition:
    """Evaluate the lower bound on the risk-aversion coefficient.

    The closed-form value function exists iff both Riccati discriminants are
    positive, which for positive denominators is equivalent to gamma
    exceeding the larger of two parameter fractions.

    Returns
    -------
    GammaCondition
        ``bound`` is the max of the two fractions, ``ok`` is True when the
        scenario's gamma clears the bound and both discriminants are
        positive.
    """
    r, mo = p.rate, p.mortality
    k1 = 2 * r.sigma_r**2 + r.theta_r**2 * r.sigma_r**2 + 2 * r.b_r * r.theta_r * r.sigma_r
    k2 = 2 * mo.b_lambda * mo.theta_lambda * mo.sigma_lambda + (
        mo.theta_lambda * mo.sigma_lambda
    ) ** 2
    den1 = (r.b_r + r.theta_r * r.sigma_r) ** 2 + 2 * r.sigma_r**2
    den2 = (mo.b_lambda + mo.theta_lambda * mo.sigma_lambda) ** 2
    frac1 = k1 / den1
    frac2 = k2 / den2 if den2 > 0 else math.inf
    bound = max(frac1, frac2)
    delta1, delta2 = riccati_discriminants(p)
    ok = p.scheme.gamma > bound and delta1 > 0 and delta2 > 0
    return GammaCondition(
        bound=bound,
        ok=ok,
        rate_fraction=frac1,
        mortality_fraction=frac2,
        delta1=delta1,
        delta2=delta2,
    )


def base_scenario(**numerics_overrides) -> ModelParams:
    """The packaged base parameter set (40-year-old member, retirement at 65)."""
    return ModelParams(
        rate=RateParams(
            a_r=0.0056210,
            b_r=0.0904668,
            sigma_r=0.0543625,
            theta_r=-0.5590635,
            r0=0.0621328,
        ),
        mortality=MortalityParams(
            b_lambda=0.561,
            sigma_lambda=0.0352,
            theta_lambda=-0.10,
            phi=0.0009944,
            m=86.4515,
            b=12.9374,
            t0=40.0,
        ),
        stock=StockParams(sigma_S=0.14926, sigma_S_r=-0.0046306, theta_S=0.1108301),
        scheme=SchemeParams(
            w=15.0, r_c=0.15, r_w=0.59, T=25.0, T_B=10.0, T_L=10.0, F0=50.0, gamma=2.0
        ),
        numerics=NumericsParams(**numerics_overrides),
    )


# ---------------------------------------------------------------------------
# Scenario files: flat "section.key = value" lines, one per field.
# ---------------------------------------------------------------------------

_SECTIONS = {
    "rate": RateParams,
    "mortality": MortalityParams,
    "stock": StockParams,
    "scheme": SchemeParams,
    "numerics": NumericsParams,
}
_INT_KEYS = {"numerics.n_paths", "numerics.seed"}


def save_scenario(params: ModelParams, path) -> None:
    """Write a scenario file that ``load_scenario`` restores bit-exactly."""
    lines = []
    for section, cls in _SECTIONS.items():
        group = getattr(params, section)
        for f in fields(cls):
            value = getattr(group, f.name)
            lines.append(f"{section}.{f.name} = {value!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_scenario(path) -> ModelParams:
    """Parse and validate a scenario file.

    Raises
    ------
    ValidationError
        On malformed lines, unknown or duplicate keys, missing required
        fields, or any violated model precondition.
    """
    path = Path(path)
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValidationError(f"{path}:{lineno}: expected 'section.key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in raw:
            raise ValidationError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value.strip()

    groups: dict[str, dict[str, float | int]] = {name: {} for name in _SECTIONS}
    for key, text in raw.items():
        section, _, name = key.partition(".")
        if section not in _SECTIONS or not name:
            raise ValidationError(f"{path}: unknown key {key!r}")
        cls = _SECTIONS[section]
        if name not in {f.name for f in fields(cls)}:
            raise ValidationError(f"{path}: unknown key {key!r}")
        try:
            value = int(text) if key in _INT_KEYS else float(text)
        except ValueError as exc:
            raise ValidationError(f"{path}: bad value for {key!r}: {text!r}") from exc
        groups[section][name] = value

    # numerics fields all carry defaults; every other field is required
    for section, cls in _SECTIONS.items():
        if section != "numerics":
            missing = {f.name for f in fields(cls)} - set(groups[section])
            if missing:
                raise ValidationError(
                    f"{path}: missing keys {sorted(section + '.' + k for k in missing)}"
                )

    return ModelParams(
        rate=RateParams(**groups["rate"]),
        mortality=MortalityParams(**groups["mortality"]),
        stock=StockParams(**groups["stock"]),
        scheme=SchemeParams(**groups["scheme"]),
        numerics=NumericsParams(**groups["numerics"]),
    )
