"""
Time integration: Strang split-step reference integrator and the Duhamel–Picard
fixed-point solver.

Picard solver
-------------
For u(t) = U(t)u0 + i ∫_0^t U(t-τ) c F(u(τ)) dτ the Duhamel part is written in
the interaction picture, ẑ(t) = E(t) Ĵ(t) with E(t) = exp(-i(2π|ξ|)^β t) and

    Ĵ(t) = i ∫_0^t E(-τ) c F̂(u(τ)) dτ.

Each window is cut into subintervals carrying s Gauss–Legendre nodes; Ĵ is
accumulated with the collocation weights (A for the interior nodes, b for the
subinterval end points). One Picard sweep evaluates F at every node of the
window from the previous iterate and rebuilds the whole trajectory, so the
iteration is the discrete Duhamel map Λ on the full window. At the fixed point
this is Gauss collocation, which conserves the discrete mass exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .exponents import ExistenceWindow, compute_exponents, existence_window, window_exponent
from .grid import Field, Grid, fft, ifft, l2_norm, lp_norm
from .nonlinearity import EquationSpec, nonlinearity_array, riesz_symbol
from .propagator import dispersion_symbol, propagator_symbol

logger = logging.getLogger(__name__)

__all__ = [
    "TimeMesh",
    "Trajectory",
    "ContractionLog",
    "NonContractionError",
    "PicardResult",
    "split_step",
    "evolve_split_step",
    "picard_local_solve",
    "duhamel_picard",
    "l2_global_evolve",
    "GlobalEvolution",
    "calibrate_constant",
    "contraction_probe",
    "spacetime_norm",
    "mesh_spacetime_norm",
    "strichartz_exponent",
]


class NonContractionError(RuntimeError):
    """Picard iteration failed to contract on the requested window."""

    def __init__(self, message: str, ratios):
        super().__init__(message)
        self.ratios = list(ratios)


def _gauss_tableau(s: int):
    x, w = np.polynomial.legendre.leggauss(s)
    c = (x + 1.0) / 2.0
    b = w / 2.0
    A = np.empty((s, s))
    for l in range(s):
        # Lagrange basis polynomial for node l, integrated from 0 to c_j
        others = np.delete(c, l)
        poly = np.poly1d(others, r=True) / np.prod(c[l] - others)
        P = np.polyint(poly)
        A[:, l] = P(c) - P(0.0)
    return c, A, b


@dataclass(frozen=True, eq=False)
class TimeMesh:
    """Subinterval end points on [0, T] with ``stages`` Gauss nodes per subinterval."""

    edges: np.ndarray
    stages: int = 3

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        if e.ndim != 1 or len(e) < 2 or np.any(np.diff(e) <= 0):
            raise ValueError("mesh edges must be strictly increasing with at least two points")
        if self.stages < 1:
            raise ValueError("need at least one Gauss node per subinterval")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def uniform(cls, T: float, subintervals: int = 16, stages: int = 3) -> "TimeMesh":
        if not T > 0:
            raise ValueError("window length must be positive")
        return cls(np.linspace(0.0, T, subintervals + 1), stages)

    @property
    def T(self) -> float:
        return float(self.edges[-1] - self.edges[0])

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def tableau(self):
        return _gauss_tableau(self.stages)

    @property
    def nodes(self) -> np.ndarray:
        c, _, _ = self.tableau
        return self.edges[:-1, None] + self.h[:, None] * c[None, :]

    @property
    def node_weights(self) -> np.ndarray:
        """Quadrature weights of the nodes for ∫ over the whole mesh."""
        _, _, b = self.tableau
        return self.h[:, None] * b[None, :]

    def shifted(self, t0: float) -> "TimeMesh":
        return TimeMesh(self.edges + t0, self.stages)

    def refined(self) -> "TimeMesh":
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        e = np.empty(2 * len(self.edges) - 1)
        e[0::2] = self.edges
        e[1::2] = mid
        return TimeMesh(e, self.stages)

    @staticmethod
    def concatenate(meshes) -> "TimeMesh":
        meshes = list(meshes)
        e = [meshes[0].edges]
        for m in meshes[1:]:
            if m.stages != meshes[0].stages:
                raise ValueError("cannot join meshes with different stage counts")
            e.append(m.edges[1:] - m.edges[0] + e[-1][-1])
        return TimeMesh(np.concatenate(e), meshes[0].stages)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots of u on a grid; optionally the Gauss-node values of the mesh."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    mesh: TimeMesh | None = None
    node_values: np.ndarray | None = None

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values disagree in length")
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("trajectory contains non-finite samples")

    def at(self, i: int) -> Field:
        return Field(self.grid, self.values[i], float(self.times[i]))

    @property
    def final(self) -> Field:
        return self.at(-1)

    def masses(self) -> np.ndarray:
        return np.asarray(l2_norm(self.values, self.grid)) ** 2

    def mass_drift(self) -> float:
        m = self.masses()
        return float(np.max(np.abs(m - m[0])) / m[0]) if m[0] > 0 else 0.0

    @staticmethod
    def concatenate(parts) -> "Trajectory":
        parts = list(parts)
        times = [parts[0].times]
        values = [parts[0].values]
        for p in parts[1:]:
            times.append(p.times[1:])
            values.append(p.values[1:])
        meshes = [p.mesh for p in parts]
        nodes = [p.node_values for p in parts]
        mesh = node_values = None
        if all(m is not None for m in meshes):
            mesh = TimeMesh.concatenate(meshes).shifted(float(parts[0].times[0]))
            if all(v is not None for v in nodes):
                node_values = np.concatenate(nodes, axis=0)
        return Trajectory(parts[0].grid, np.concatenate(times), np.concatenate(values, axis=0),
                          mesh, node_values)


# ---------------------------------------------------------------------------
# split-step reference integrator
# ---------------------------------------------------------------------------

def _nonlinear_phase(u: np.ndarray, grid: Grid, spec: EquationSpec, h: float, riesz) -> np.ndarray:
    if spec.is_linear:
        return u
    if spec.kind == "power":
        N = np.abs(u) ** spec.alpha
    else:
        N = ifft(fft(np.abs(u) ** 2, grid) * riesz, grid).real
    return u * np.exp(1j * spec.strength * h * N)


def split_step(u: Field, spec: EquationSpec, h: float) -> Field:
    """One Strang step: U(h/2), exact nonlinear phase rotation over h, U(h/2)."""
    if not h > 0:
        raise ValueError("time step must be positive")
    g = u.grid
    half = propagator_symbol(g, spec.beta, h / 2)
    riesz = riesz_symbol(g, spec.nu) if spec.kind == "hartree" else None
    out = _strang(u.values, g, spec, h, half, riesz)
    return Field(g, out, u.time + h)


def _strang(v, g, spec, h, half, riesz):
    v = ifft(fft(v, g) * half, g)
    v = _nonlinear_phase(v, g, spec, h, riesz)
    v = ifft(fft(v, g) * half, g)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError(f"split-step produced non-finite values (h={h})")
    return v


def evolve_split_step(u0: Field, spec: EquationSpec, T: float, steps: int,
                      snapshots: int | None = None) -> Trajectory:
    """Strang integration over [0, T] with ``steps`` equal steps.

    ``snapshots`` evenly spaced frames are stored (must divide ``steps``);
    by default only the end points.
    """
    g = u0.grid
    h = T / steps
    every = steps if snapshots is None else steps // snapshots
    if snapshots is not None and steps % snapshots:
        raise ValueError("snapshots must divide steps")
    half = propagator_symbol(g, spec.beta, h / 2)
    riesz = riesz_symbol(g, spec.nu) if spec.kind == "hartree" else None
    v = np.array(u0.values)
    times, frames = [u0.time], [v.copy()]
    for k in range(1, steps + 1):
        v = _strang(v, g, spec, h, half, riesz)
        if k % every == 0:
            times.append(u0.time + k * h)
            frames.append(v.copy())
    return Trajectory(g, np.array(times), np.array(frames))


# ---------------------------------------------------------------------------
# Duhamel–Picard
# ---------------------------------------------------------------------------

@dataclass
class ContractionLog:
    deltas: list = field(default_factory=list)      # sup-over-mesh L² update per sweep
    strichartz_deltas: list = field(default_factory=list)  # L^q_T L^r update per sweep
    ratios: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "deltas": [float(d) for d in self.deltas],
            "strichartz_deltas": [float(d) for d in self.strichartz_deltas],
            "ratios": [float(r) for r in self.ratios],
            "max_ratio": float(self.max_ratio),
        }


@dataclass(frozen=True, eq=False)
class PicardResult:
    trajectory: Trajectory
    log: ContractionLog
    window: ExistenceWindow | None = None


def strichartz_exponent(spec: EquationSpec) -> tuple[float, float]:
    """(q, r) of the auxiliary space-time norm: (1/κ, α+2) or (4/θ, 4n/(2n-ν))."""
    n, b = spec.n, spec.beta
    if spec.kind == "power":
        a = spec.alpha
        return 2.0 * b * (a + 2.0) / (n * a), a + 2.0
    return 4.0 * b / spec.nu, 4.0 * n / (2.0 * n - spec.nu)


def mesh_spacetime_norm(node_values: np.ndarray, mesh: TimeMesh, grid: Grid, q: float, r: float) -> float:
    """L^q_T L^r norm from Gauss-node values (Gauss quadrature in time)."""
    nr = np.asarray(lp_norm(node_values, grid, r))
    if math.isinf(q):
        return float(np.max(nr))
    return float(np.sum(mesh.node_weights * nr**q) ** (1.0 / q))


def duhamel_picard(
    grid: Grid,
    beta: float,
    mesh: TimeMesh,
    forcing: Callable[[np.ndarray], np.ndarray],
    *,
    scale: float,
    tol: float = 1e-10,
    max_iter: int = 50,
    norm_qr: tuple[float, float] | None = None,
    init: np.ndarray | None = None,
    raise_on_failure: bool = True,
) -> tuple[np.ndarray, np.ndarray, ContractionLog]:
    """Fixed point z = i ∫_0^t U(t-τ) Φ(z)(τ) dτ on ``mesh``.

    ``forcing(z_nodes)`` returns Φ at the nodes, shape (S, s) + grid.shape, and
    must already include the coupling constant. Returns (z at nodes, z at
    edges, log). Convergence: sup-over-mesh L² update <= tol * scale.
    """
    c, A, b = mesh.tableau
    S, s = len(mesh.h), mesh.stages
    lam = dispersion_symbol(grid, beta)
    tau = mesh.nodes
    h = mesh.h
    Eneg = np.exp(1j * lam[None, None] * tau.reshape(S, s, *([1] * grid.n)))  # E(-τ)
    Epos = np.conj(Eneg)
    Eedge = np.exp(-1j * lam[None] * mesh.edges.reshape(-1, *([1] * grid.n)))

    z = np.zeros((S, s) + grid.shape, dtype=complex) if init is None else np.array(init, dtype=complex)
    z_edges = np.zeros((S + 1,) + grid.shape, dtype=complex)
    log = ContractionLog()
    floor = 1e-14 * max(scale, 1e-300)
    above = 0
    for m in range(1, max_iter + 1):
        Phi = forcing(z)
        g = 1j * Eneg * fft(Phi, grid)
        Jn = np.empty_like(g)
        Je = np.zeros((S + 1,) + grid.shape, dtype=complex)
        for i in range(S):
            # interior nodes from the left end point, then the next end point
            Jn[i] = Je[i][None] + h[i] * np.tensordot(A, g[i], axes=(1, 0))
            Je[i + 1] = Je[i] + h[i] * np.tensordot(b, g[i], axes=(0, 0))
        z_new = ifft(Epos * Jn, grid)
        ze_new = ifft(Eedge * Je, grid)
        dn = np.asarray(l2_norm(z_new - z, grid))
        de = np.asarray(l2_norm(ze_new - z_edges, grid))
        delta = float(max(np.max(dn), np.max(de)))
        if norm_qr is not None:
            log.strichartz_deltas.append(mesh_spacetime_norm(z_new - z, mesh, grid, *norm_qr))
        if log.deltas and log.deltas[-1] > floor:
            log.ratios.append(delta / log.deltas[-1])
        log.deltas.append(delta)
        log.iterations = m
        z, z_edges = z_new, ze_new
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(z_edges))):
            raise FloatingPointError("Picard iterate became non-finite")
        if delta <= tol * scale or delta <= floor:
            log.converged = True
            break
        if log.ratios and log.ratios[-1] >= 1.0:
            above += 1
            if above >= 3 and raise_on_failure:
                raise NonContractionError(
                    f"window too large: contraction ratio {log.ratios[-1]:.3g} >= 1 "
                    f"for 3 consecutive iterations (T = {mesh.T:.4g})",
                    log.ratios,
                )
        else:
            above = 0
    if not log.converged and raise_on_failure:
        raise NonContractionError(
            f"Picard iteration did not reach tol {tol:g} in {max_iter} iterations "
            f"(last ratio {log.ratios[-1] if log.ratios else float('nan'):.3g})",
            log.ratios,
        )
    return z, z_edges, log


def _free_flow(u0: np.ndarray, grid: Grid, beta: float, times: np.ndarray) -> np.ndarray:
    lam = dispersion_symbol(grid, beta)
    u0h = fft(u0, grid)
    t = np.asarray(times)
    E = np.exp(-1j * lam * t.reshape(t.shape + (1,) * grid.n))
    return ifft(E * u0h, grid)


def _forcing_for(spec: EquationSpec, grid: Grid, base_nodes: np.ndarray):
    riesz = riesz_symbol(grid, spec.nu) if spec.kind == "hartree" else None

    def forcing(z):
        return nonlinearity_array(base_nodes + z, grid, spec, riesz)

    return forcing


def picard_local_solve(
    u0: Field,
    spec: EquationSpec,
    T: ExistenceWindow | float,
    tol: float = 1e-10,
    max_iter: int = 50,
    *,
    subintervals: int = 16,
    stages: int = 3,
    mesh: TimeMesh | None = None,
    keep_nodes: bool = True,
) -> PicardResult:
    """Fixed point of the Duhamel map Λ on [0, T] starting from the free flow."""
    window = T if isinstance(T, ExistenceWindow) else None
    Tval = T.T if isinstance(T, ExistenceWindow) else float(T)
    g = u0.grid
    mesh = TimeMesh.uniform(Tval, subintervals, stages) if mesh is None else mesh
    base_nodes = _free_flow(u0.values, g, spec.beta, mesh.nodes)
    base_edges = _free_flow(u0.values, g, spec.beta, mesh.edges)
    scale = max(l2_norm(u0.values, g), 1e-300)
    z, ze, log = duhamel_picard(
        g, spec.beta, mesh, _forcing_for(spec, g, base_nodes),
        scale=scale, tol=tol, max_iter=max_iter, norm_qr=strichartz_exponent(spec),
    )
    traj = Trajectory(
        g, u0.time + mesh.edges, base_edges + ze, mesh.shifted(u0.time),
        (base_nodes + z) if keep_nodes else None,
    )
    return PicardResult(traj, log, window)


def contraction_probe(u0: Field, spec: EquationSpec, T: float, sweeps: int = 4,
                      subintervals: int = 8, stages: int = 3) -> float:
    """Largest Picard contraction ratio over the first ``sweeps`` sweeps on [0, T]."""
    g = u0.grid
    mesh = TimeMesh.uniform(T, subintervals, stages)
    base_nodes = _free_flow(u0.values, g, spec.beta, mesh.nodes)
    _, _, log = duhamel_picard(
        g, spec.beta, mesh, _forcing_for(spec, g, base_nodes),
        scale=max(l2_norm(u0.values, g), 1e-300), tol=0.0, max_iter=sweeps,
        raise_on_failure=False,
    )
    return log.max_ratio


def _window_rule(spec: EquationSpec) -> str:
    return "power_mass" if spec.kind == "power" else "hartree_mass"


def calibrate_constant(u0: Field, spec: EquationSpec, target_ratio: float = 0.5,
                       rel_tol: float = 0.02, **probe_kw) -> float:
    """Largest window constant C whose window keeps the contraction ratio <= target.

    Bisection on log C; once the window reaches its cap of 1, larger C change
    nothing and the cap-reaching C is returned.
    """
    ex = compute_exponents(spec)
    norm = l2_norm(u0.values, u0.grid)
    if norm == 0 or spec.is_linear:
        return 1.0
    e = window_exponent(ex)
    C_cap = norm**e  # C at which C·‖u0‖^{-e} = 1

    def ratio(C):
        T = existence_window({"u0": norm}, ex, _window_rule(spec), C).T
        return contraction_probe(u0, spec, T, **probe_kw)

    if ratio(C_cap) <= target_ratio:
        return C_cap
    lo = C_cap
    while True:
        lo /= 4.0
        if ratio(lo) <= target_ratio:
            break
        if lo < C_cap * 1e-12:
            raise NonContractionError("could not find a contracting window", [])
    hi = lo * 4.0
    while hi / lo > 1.0 + rel_tol:
        mid = math.sqrt(lo * hi)
        if ratio(mid) <= target_ratio:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True, eq=False)
class GlobalEvolution:
    trajectory: Trajectory
    windows: list          # window length from the existence rule, per step
    steps: list            # step actually taken (last one may be shortened)
    logs: list


def l2_global_evolve(
    u0: Field,
    spec: EquationSpec,
    horizon: float,
    C: float = 1.0,
    tol: float = 1e-11,
    max_iter: int = 60,
    *,
    subintervals: int = 16,
    stages: int = 3,
    keep_nodes: bool = False,
) -> GlobalEvolution:
    """Chain Picard windows from the L²-based existence rule up to ``horizon``.

    The window is recomputed from ‖u(t_k)‖_{L²} at every restart; mass
    conservation makes it constant.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    ex = compute_exponents(spec)
    rule = _window_rule(spec)
    parts, windows, steps, logs = [], [], [], []
    cur = u0
    t = 0.0
    while t < horizon * (1 - 1e-14):
        w = existence_window({"u0": l2_norm(cur.values, cur.grid)}, ex, rule, C)
        step = min(w.T, horizon - t)
        res = picard_local_solve(cur, spec, step, tol, max_iter, subintervals=subintervals,
                                 stages=stages, keep_nodes=keep_nodes)
        windows.append(w.T)
        steps.append(step)
        logs.append(res.log)
        parts.append(res.trajectory)
        t += step
        cur = res.trajectory.final
    return GlobalEvolution(Trajectory.concatenate(parts), windows, steps, logs)


def spacetime_norm(traj: Trajectory, q: float, r: float, T: float | None = None,
                   with_error: bool = False):
    """(∫_0^T ‖u(t)‖_{L^r}^q dt)^{1/q} by composite trapezoid over the snapshots.

    With ``with_error`` the difference against the trapezoid on every second
    snapshot (Richardson estimate) is returned as well.
    """
    t = np.asarray(traj.times, dtype=float) - float(traj.times[0])
    vals = traj.values
    if T is not None:
        keep = t <= T * (1 + 1e-12)
        t, vals = t[keep], vals[keep]
    if len(t) < 3:
        raise ValueError("need at least 3 snapshots for a space-time norm")
    nr = np.asarray(lp_norm(vals, traj.grid, r))
    if math.isinf(q):
        val = float(np.max(nr))
        return (val, 0.0) if with_error else val
    fine = float(trapezoid(nr**q, t)) ** (1.0 / q)
    if not with_error:
        return fine
    tt, nn = t[::2], nr[::2]
    if tt[-1] != t[-1]:
        tt, nn = np.append(tt, t[-1]), np.append(nn, nr[-1])
    coarse = float(trapezoid(nn**q, tt)) ** (1.0 / q)
    return fine, abs(fine - coarse) / 3.0
