"""
Property suite run by ``fnls-lab verify``.

Each check is a small, fast instance of an invariant of one module. A check
returns (passed, measured value, threshold); exceptions count as failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import admissible_q
from .exponents import check_gamma_range, compute_exponents, existence_window
from .families import gaussian_mix, modulated_gaussians
from .grid import Field, forward_transform, inverse_transform, l2_norm, make_grid, radial_profile, reflect
from .highlow import solve_interaction, split_data
from .modulation import box_piece, build_partition
from .nonlinearity import EquationSpec, gtilde_array, difference_bound_constant, potential_array
from .propagator import apply_propagator, group_property_check
from .solver import evolve_split_step, l2_global_evolve, picard_local_solve

__all__ = ["CHECKS", "CheckResult", "run_suite", "MODULES"]


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    passed: bool
    value: float | None
    threshold: float | None
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "module": self.module, "name": self.name, "passed": self.passed,
            "value": self.value, "threshold": self.threshold, "message": self.message,
            "source": f"verify.{self.name}",
        }


def _grid2(M=64, L=4.0):
    return make_grid(2, L, M)


def check_parseval(seed):
    g = _grid2()
    f = modulated_gaussians(g, 1, seed=seed)[0]
    F = forward_transform(f)
    err = abs(F.norm() - f.norm()) / f.norm()
    return err <= 1e-12, err, 1e-12


def check_roundtrip(seed):
    g = _grid2()
    f = modulated_gaussians(g, 1, seed=seed)[0]
    back = inverse_transform(forward_transform(f))
    err = l2_norm(back.values - f.values, g) / f.norm()
    return err <= 1e-13, err, 1e-13


def check_reflection(seed):
    g = _grid2()
    f = radial_profile(g, "gaussian", a=1.0)
    err = max(np.max(np.abs(reflect(f.values, ax) - f.values)) for ax in range(2))
    return err == 0.0, err, 0.0


def check_unitarity(seed):
    g = _grid2()
    f = modulated_gaussians(g, 1, seed=seed)[0]
    err = abs(apply_propagator(f, 1.5, 0.7).norm() - f.norm()) / f.norm()
    return err <= 1e-12, err, 1e-12


def check_group_law(seed):
    g = _grid2()
    f = modulated_gaussians(g, 1, seed=seed)[0]
    err = group_property_check(f, 1.5, 0.3, 0.45)
    return err <= 1e-11, err, 1e-11


def check_schrodinger_gaussian(seed):
    g = make_grid(2, 8.0, 128)
    t = 0.05
    f = radial_profile(g, "gaussian", a=1.0)
    u = apply_propagator(f, 2.0, t).values
    z = 1 + 4j * np.pi * t
    exact = z ** (-1.0) * np.exp(-np.pi * g.radius**2 / z)
    err = float(np.max(np.abs(u - exact)))
    return err <= 1e-6, err, 1e-6


def check_partition_unity(seed):
    g = _grid2()
    part = build_partition(g)
    total = sum(part.sigma(k) for k in part.blocks)
    err = float(np.max(np.abs(total - 1.0)))
    return err <= 1e-12, err, 1e-12


def check_reconstruction(seed):
    g = _grid2()
    part = build_partition(g)
    f = modulated_gaussians(g, 1, seed=seed)[0]
    acc = sum(box_piece(f, part, k).values for k in part.blocks)
    err = l2_norm(acc - f.values, g) / f.norm()
    return err <= 1e-11, err, 1e-11


def check_hartree_split(seed):
    g = _grid2()
    v, w1, w2 = (f.values for f in modulated_gaussians(g, 3, seed=seed))
    direct = potential_array(v + w1, g, 1.0) * (v + w1) - potential_array(v + w2, g, 1.0) * (v + w2)
    split = gtilde_array(v, w1, w2, g, 1.0)
    err = l2_norm(split - direct, g) / l2_norm(direct, g)
    return err <= 1e-10, err, 1e-10


def check_eg_constant(seed):
    vals = [difference_bound_constant(a, samples=20_000, seed=seed) for a in (0.5, 1.0, 2.0)]
    bounds = [(a + 1) * max(1.0, 3 ** (a - 1)) for a in (0.5, 1.0, 2.0)]
    worst = max(v / b for v, b in zip(vals, bounds))
    return worst <= 1.0, worst, 1.0


def check_exponents(seed):
    ex = compute_exponents(EquationSpec("power", 1.5, 2, alpha=1.0), 2.2)
    err = max(abs(ex.omega - 1 / 3), abs(ex.kappa - 2 / 9), abs(ex.p_max - 7 / 3),
              abs(ex.gamma - 0.375), abs(ex.horizon_exponent - 0.5))
    h = compute_exponents(EquationSpec("hartree", 1.5, 2, nu=1.0))
    err = max(err, abs(h.s_max - 40 / 19))
    return err <= 1e-12, err, 1e-12


def check_gamma_consistency(seed):
    spec = EquationSpec("power", 1.5, 2, alpha=1.0)
    bad = 0
    for p in np.linspace(2.01, 2.99, 50):
        if not check_gamma_range(spec, float(p)).consistent:
            bad += 1
    return bad == 0, float(bad), 0.0


def check_window_examples(seed):
    spec = EquationSpec("power", 1.5, 2, alpha=1.0)
    a = existence_window({"u0": 4.0}, spec, "power_mass").T
    h = EquationSpec("hartree", 1.5, 2, nu=1.0)
    b = existence_window({"phi": 0.0, "psi": 2.0}, h, "hartree_split").conditions["high"]
    err = max(abs(a - 1 / 64), abs(b - 1 / 8))
    return err <= 1e-15, err, 1e-15


def check_split_mass(seed):
    g = make_grid(2, 8.0, 64)
    u0 = radial_profile(g, "gaussian", a=1.0)
    tr = evolve_split_step(u0, EquationSpec("power", 1.5, 2, alpha=1.0), 0.5, 200)
    d = tr.mass_drift()
    return d <= 1e-10, d, 1e-10


def check_picard_mass(seed):
    g = make_grid(2, 8.0, 64)
    u0 = radial_profile(g, "gaussian", a=1.0)
    ev = l2_global_evolve(u0, EquationSpec("power", 1.5, 2, alpha=1.0), 0.5)
    d = ev.trajectory.mass_drift()
    return d <= 1e-8, d, 1e-8


def check_solver_agreement(seed):
    g = make_grid(2, 8.0, 64)
    u0 = radial_profile(g, "gaussian", a=1.0)
    spec = EquationSpec("power", 1.5, 2, alpha=1.0)
    pic = picard_local_solve(u0, spec, 0.25, 1e-12).trajectory.final.values
    ss = evolve_split_step(u0, spec, 0.25, 800).final.values
    gap = l2_norm(pic - ss, g) / l2_norm(ss, g)
    return gap <= 1e-5, gap, 1e-5


def check_split_merge(seed):
    g = make_grid(2, 4.0, 64)
    u = gaussian_mix(g, widths=(1.0, 0.5))
    s = split_data(u, 2.2, 3.0, 4.0, build_partition(g))
    err = l2_norm(s.v.values + s.w.values - u.values, g) / u.norm()
    return err <= 1e-11, err, 1e-11


def check_zero_interaction(seed):
    g = make_grid(2, 8.0, 64)
    spec = EquationSpec("power", 1.5, 2, alpha=1.0)
    v = l2_global_evolve(radial_profile(g, "gaussian", a=1.0), spec, 0.1, keep_nodes=True)
    w = solve_interaction(v.trajectory, Field(g, np.zeros(g.shape)), spec)
    val = float(np.max(np.abs(w.trajectory.values)))
    return val == 0.0, val, 0.0


def check_admissible(seed):
    ok = admissible_q(4, 1.5, 2) == 3.0 and admissible_q(2, 1.5, 2) is None and math.isinf(admissible_q(2, 1.5, 3))
    worst = 0.0
    for n in (2, 3):
        for r in np.linspace(2.1, 10, 25):
            q = admissible_q(float(r), 1.5, n)
            if q is not None:
                worst = max(worst, abs(1.5 / q - n * (0.5 - 1 / r)))
    return ok and worst <= 1e-14, worst, 1e-14


CHECKS: dict[str, tuple[str, Callable]] = {
    "parseval": ("grid_spectral", check_parseval),
    "transform_roundtrip": ("grid_spectral", check_roundtrip),
    "reflection_symmetry": ("grid_spectral", check_reflection),
    "unitarity": ("propagator", check_unitarity),
    "group_law": ("propagator", check_group_law),
    "schrodinger_gaussian": ("propagator", check_schrodinger_gaussian),
    "partition_of_unity": ("modulation", check_partition_unity),
    "reconstruction": ("modulation", check_reconstruction),
    "hartree_split_identity": ("nonlinearity", check_hartree_split),
    "difference_bound_constant": ("nonlinearity", check_eg_constant),
    "exponent_values": ("solver", check_exponents),
    "window_examples": ("solver", check_window_examples),
    "split_step_mass": ("solver", check_split_mass),
    "picard_mass": ("solver", check_picard_mass),
    "solver_agreement": ("solver", check_solver_agreement),
    "gamma_range_consistency": ("highlow", check_gamma_consistency),
    "split_merge": ("highlow", check_split_merge),
    "zero_interaction": ("highlow", check_zero_interaction),
    "admissible_inverse": ("analysis", check_admissible),
}

MODULES = tuple(sorted({m for m, _ in CHECKS.values()}))


def run_suite(filter: str | None = None, seed: int = 0) -> list[CheckResult]:
    """Run all checks (or those of one module) in a fixed order."""
    if filter is not None and filter not in MODULES:
        raise ValueError(f"unknown module filter {filter!r}; expected one of {MODULES}")
    out = []
    for name, (module, fn) in CHECKS.items():
        if filter is not None and module != filter:
            continue
        try:
            ok, val, thr = fn(seed)
            out.append(CheckResult(module, name, bool(ok), _f(val), _f(thr)))
        except Exception as exc:  # a crashing check is a failing check
            out.append(CheckResult(module, name, False, None, None, f"{type(exc).__name__}: {exc}"))
    return out


def _f(v):
    return None if v is None else float(v)
