"""
Closed-form exponents of the well-posedness theory and the local-existence
windows built from them.

Power case (F = |u|^α u), with r = α + 2:
    ω = 1 - nα/(2β),  κ = nα/(2β(α+2))
    γ(p) = (1/2 - 1/p)/(1/p - 1/(α+2))
    horizon exponent 1 - γ(α(1-κ)/ω - 1)
    p_max = 2 + 2/(α+1) - nα/(β(α+1)) if α(1-κ) - ω > 0, else α + 2

Hartree case (F = (|x|^{-ν} * |u|²) u), with r = 4n/(2n-ν):
    θ = ν/β,  γ̃(s) = (1/2 - 1/s)/(1/s - (2n-ν)/(4n))
    horizon exponent 1 - γ̃(2+θ)/(2(1-θ))
    s_max = 2n(4β-ν)/(n(4β-ν) - ν(β-ν))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .nonlinearity import EquationSpec

__all__ = [
    "Exponents",
    "compute_exponents",
    "gamma_power",
    "gamma_hartree",
    "target_exponent",
    "ExistenceWindow",
    "existence_window",
    "window_exponent",
    "bourgain_window",
    "GammaRangeReport",
    "check_gamma_range",
]


def gamma_power(p: float, alpha: float) -> float:
    return (0.5 - 1.0 / p) / (1.0 / p - 1.0 / (alpha + 2.0))


def gamma_hartree(s: float, n: int, nu: float) -> float:
    return (0.5 - 1.0 / s) / (1.0 / s - (2.0 * n - nu) / (4.0 * n))


def target_exponent(spec) -> float:
    """Lebesgue exponent r of the modulation space M^{r,r'} that carries ψ.

    Accepts an EquationSpec or an Exponents record.
    """
    if spec.kind == "power":
        return spec.alpha + 2.0
    return 4.0 * spec.n / (2.0 * spec.n - spec.nu)


@dataclass(frozen=True)
class Exponents:
    kind: str
    n: int
    beta: float
    alpha: float | None
    nu: float | None
    p_or_s: float | None
    omega: float | None = None
    kappa: float | None = None
    theta: float | None = None
    gamma: float | None = None
    gamma_tilde: float | None = None
    p_max: float | None = None
    s_max: float | None = None
    s_c: float = 0.0
    case_value: float | None = None
    gamma_bound: float = math.inf
    horizon_exponent: float | None = None
    in_range: bool | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def window_exponent(self) -> float:
        return window_exponent(self)

    @property
    def increment_exponent(self) -> float:
        """Power of T in the per-window bound on ‖w‖_{L^∞_T L²}: κ or θ/4."""
        return self.kappa if self.kind == "power" else self.theta / 4.0


def compute_exponents(spec: EquationSpec, p_or_s: float | None = None) -> Exponents:
    n, b = spec.n, spec.beta
    flags = tuple(spec.hypothesis_violations())
    if spec.kind == "power":
        a = spec.alpha
        omega = 1.0 - n * a / (2.0 * b)
        kappa = n * a / (2.0 * b * (a + 2.0))
        case = a * (1.0 - kappa) - omega
        if case > 0:
            p_max = 2.0 + 2.0 / (a + 1.0) - n * a / (b * (a + 1.0))
            gbound = omega / case
        else:
            p_max = a + 2.0
            gbound = math.inf
        gam = hexp = None
        inside = None
        if p_or_s is not None:
            p = float(p_or_s)
            gam = gamma_power(p, a)
            hexp = 1.0 - gam * (-1.0 + a * (1.0 - kappa) / omega)
            inside = 2.0 < p < p_max
        return Exponents(
            kind="power", n=n, beta=b, alpha=a, nu=None, p_or_s=p_or_s,
            omega=omega, kappa=kappa, gamma=gam, p_max=p_max,
            s_c=n / 2.0 - b / a, case_value=case, gamma_bound=gbound,
            horizon_exponent=hexp, in_range=inside, flags=flags,
        )
    nu = spec.nu
    theta = nu / b
    s_max = 2.0 * n * (4.0 * b - nu) / (n * (4.0 * b - nu) - nu * (b - nu))
    gbound = 2.0 * (1.0 - theta) / (2.0 + theta)
    gt = hexp = None
    inside = None
    if p_or_s is not None:
        s = float(p_or_s)
        gt = gamma_hartree(s, n, nu)
        hexp = 1.0 - gt * (2.0 + theta) / (2.0 * (1.0 - theta))
        inside = 2.0 < s < s_max
    return Exponents(
        kind="hartree", n=n, beta=b, alpha=None, nu=nu, p_or_s=p_or_s,
        theta=theta, gamma_tilde=gt, s_max=s_max, s_c=(nu - b) / 2.0,
        gamma_bound=gbound, horizon_exponent=hexp, in_range=inside, flags=flags,
    )


def window_exponent(ex: Exponents) -> float:
    """Exponent e in T = C·‖u0‖^{-e}: α/ω (power) or 2/(1-θ) (Hartree)."""
    if ex.kind == "power":
        return ex.alpha / ex.omega
    return 2.0 / (1.0 - ex.theta)


@dataclass(frozen=True)
class ExistenceWindow:
    T: float
    rule: str
    inputs: dict
    conditions: dict

    @property
    def binding(self) -> str:
        """Name of the condition attaining the minimum."""
        return min(self.conditions, key=lambda k: (self.conditions[k], k))


_RULES = ("power_mass", "hartree_mass", "power_split", "hartree_split")


def _term(C: float, norm: float, expo: float) -> float:
    if norm <= 0:
        return math.inf
    return C * norm ** (-expo)


def existence_window(norms: dict, spec: EquationSpec | Exponents, rule: str, C: float = 1.0) -> ExistenceWindow:
    """Local existence time from the norms of the data.

    ``norms`` keys:
        power_mass / hartree_mass: "u0" (the L² + M norm of the datum)
        power_split / hartree_split: "phi" (‖φ‖_{L²}) and "psi" (‖ψ‖ in the modulation space)
    """
    ex = spec if isinstance(spec, Exponents) else compute_exponents(spec)
    if rule not in _RULES:
        raise ValueError(f"unknown window rule {rule!r}; expected one of {_RULES}")
    for k, v in norms.items():
        if v < 0:
            raise ValueError(f"norm {k} must be nonnegative")
    conds = {"cap": 1.0}
    if rule in ("power_mass", "hartree_mass"):
        if (rule == "power_mass") != (ex.kind == "power"):
            raise ValueError(f"rule {rule} does not match a {ex.kind} nonlinearity")
        conds["norm"] = _term(C, norms["u0"], window_exponent(ex))
    elif rule == "power_split":
        if ex.kind != "power":
            raise ValueError("rule power_split applies to the power nonlinearity")
        a, om, ka = ex.alpha, ex.omega, ex.kappa
        conds["combined"] = _term(C, norms["phi"] + norms["psi"], a / om)
        conds["high"] = _term(C, norms["psi"], a / (om + a * ka))
    else:
        if ex.kind != "hartree":
            raise ValueError("rule hartree_split applies to the Hartree nonlinearity")
        th = ex.theta
        conds["combined"] = _term(C, norms["phi"] + norms["psi"], 2.0 / (1.0 - th))
        conds["high"] = _term(C, norms["psi"], 4.0 / (2.0 - th))
    T = min(conds.values())
    return ExistenceWindow(T=T, rule=rule, inputs=dict(norms, C=C), conditions=conds)


def bourgain_window(ex: Exponents, N: float, C: float = 1.0) -> float:
    """T(N) = (3 C N^γ)^{-α/ω} (power) or (3 C N^γ̃)^{-2/(1-θ)} (Hartree)."""
    g = ex.gamma if ex.kind == "power" else ex.gamma_tilde
    if g is None:
        raise ValueError("exponents were computed without p (or s)")
    return (3.0 * C * N**g) ** (-window_exponent(ex))


@dataclass(frozen=True)
class GammaRangeReport:
    kind: str
    gamma: float
    gamma_bound: float
    case_positive: bool
    horizon_exponent: float
    exponent_positive: bool
    threshold: float          # p_max or s_max
    threshold_from_bound: float
    below_threshold: bool
    applicable: bool          # 2 < p < r, where γ is positive and increasing
    consistent: bool


def _invert_gamma(ex: Exponents) -> float:
    # p (or s) at which γ reaches its admissible bound
    if math.isinf(ex.gamma_bound):
        return target_exponent(ex)
    G = ex.gamma_bound
    b = 1.0 / target_exponent(ex)
    return (1.0 + G) / (0.5 + G * b)


def check_gamma_range(spec: EquationSpec, p_or_s: float) -> GammaRangeReport:
    """Compare the γ-range condition with the closed-form p_max (or s_max)."""
    ex = compute_exponents(spec, p_or_s)
    if ex.kind == "power":
        g, thr, case_pos = ex.gamma, ex.p_max, ex.case_value > 0
    else:
        g, thr, case_pos = ex.gamma_tilde, ex.s_max, True
    pos = ex.horizon_exponent > 0
    below = 2.0 < p_or_s < thr
    applicable = 2.0 < p_or_s < target_exponent(ex)
    return GammaRangeReport(
        kind=ex.kind, gamma=g, gamma_bound=ex.gamma_bound, case_positive=case_pos,
        horizon_exponent=ex.horizon_exponent, exponent_positive=pos,
        threshold=thr, threshold_from_bound=_invert_gamma(ex),
        below_threshold=below, applicable=applicable,
        consistent=(pos == below) if applicable else True,
    )
