"""
High-low frequency splitting and the iterated low/high evolution.

Rough data u0 are cut into a low part φ (finite L² norm, growing like N^γ) and
a high part ψ (small in M^{r,r'}, decaying like 1/N). The low part is evolved
by the L² theory; the high part only by the free flow; the interaction term
w collects the nonlinear coupling. After each window of length T(N) the
interaction term is folded back into the low part:

    φ_{k+1} = v_k(T) + w_k(T),    u((k+1)T) = φ_{k+1} + U((k+1)T)ψ.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

from .exponents import (
    bourgain_window,
    check_gamma_range,
    compute_exponents,
    existence_window,
    target_exponent,
)
from .grid import Field, Grid, fft, ifft, l2_norm
from .modulation import ModNormSpec, ModulationPartition, build_partition, conjugate, mod_norm
from .nonlinearity import EquationSpec, _G, gtilde_array, riesz_symbol
from .propagator import propagate_array
from .solver import (
    ContractionLog,
    NonContractionError,
    TimeMesh,
    Trajectory,
    _free_flow,
    duhamel_picard,
    l2_global_evolve,
    picard_local_solve,
    strichartz_exponent,
)

logger = logging.getLogger(__name__)

__all__ = [
    "SplitResult",
    "split_data",
    "InteractionResult",
    "solve_interaction",
    "LedgerRow",
    "IterationLedger",
    "bourgain_iterate",
    "check_gamma_range",
]


@dataclass(frozen=True, eq=False)
class SplitResult:
    v: Field
    w: Field
    N: float
    gamma: float
    measured_v_norm: float        # ‖v‖_{L²}
    measured_w_norm: float        # ‖w‖_{M^{r,r'}}
    source_norm: float            # ‖u‖_{M^{p,p'}}
    cutoff: float                 # frequency radius R(N)
    p: float
    r: float


def _mod(values: np.ndarray, part: ModulationPartition, p: float) -> float:
    return mod_norm(Field(part.grid, values), part, ModNormSpec(p, conjugate(p)))


def split_data(u: Field, p: float, r: float, N: float, part: ModulationPartition | None = None,
               radius: float | None = None) -> SplitResult:
    """Sharp radial frequency cutoff v = F^{-1}[1_{|ξ|<=R} û], w = u - v.

    R is the smallest lattice radius with ‖w‖_{M^{r,r'}} <= ‖u‖_{M^{p,p'}}/N,
    located by bisection over the sorted distinct radii; ``radius`` overrides
    the search.
    """
    if not 2 < p < r:
        raise ValueError(f"splitting needs 2 < p < r, got p={p}, r={r}")
    if not N > 1:
        raise ValueError("splitting parameter N must exceed 1")
    g = u.grid
    part = build_partition(g) if part is None else part
    uhat = fft(u.values, g)
    k = np.asarray(g.xi_abs)
    src = _mod(u.values, part, p)
    target = src / N

    def pieces(R):
        v = ifft(np.where(k <= R, uhat, 0), g)
        return v, u.values - v

    if radius is None:
        radii = np.unique(k)
        # radii beyond the inscribed ball of the band would cut an anisotropic set
        inscribed = g.band_edge
        lo, hi = 0, len(radii) - 1
        if _mod(pieces(radii[hi])[1], part, r) > target:
            raise ValueError("no cutoff on this grid reaches the requested split; refine the grid")
        while lo < hi:
            mid = (lo + hi) // 2
            if _mod(pieces(radii[mid])[1], part, r) <= target:
                hi = mid
            else:
                lo = mid + 1
        R = float(radii[lo])
        if R > inscribed:
            raise ValueError(
                f"cutoff radius {R:.4g} for N={N:g} exceeds the grid band {inscribed:.4g}; refine the grid"
            )
    else:
        R = float(radius)
    v, w = pieces(R)
    gam = (0.5 - 1.0 / p) / (1.0 / p - 1.0 / r)
    return SplitResult(
        v=Field(g, v, u.time), w=Field(g, w, u.time), N=float(N), gamma=gam,
        measured_v_norm=l2_norm(v, g), measured_w_norm=_mod(w, part, r),
        source_norm=src, cutoff=R, p=p, r=r,
    )


@dataclass(frozen=True, eq=False)
class InteractionResult:
    trajectory: Trajectory
    log: ContractionLog
    final_norm: float     # ‖w(T)‖_{L²}
    sup_norm: float       # ‖w‖_{L^∞_T L²} over edges and nodes


def _interaction_forcing(spec: EquationSpec, grid: Grid, v_nodes, lin_nodes):
    c = spec.strength
    if spec.kind == "power":
        a = spec.alpha
        fixed = _G(v_nodes, lin_nodes, 0.0, a)
        base = v_nodes + lin_nodes

        def forcing(w):
            return c * (_G(base, w, 0.0, a) + fixed)
    else:
        sym = riesz_symbol(grid, spec.nu)
        zero = np.zeros_like(v_nodes)
        fixed = gtilde_array(v_nodes, lin_nodes, zero, grid, spec.nu, sym)
        base = v_nodes + lin_nodes

        def forcing(w):
            return c * (gtilde_array(base, w, zero, grid, spec.nu, sym) + fixed)

    return forcing


def solve_interaction(v_traj: Trajectory, psi: Field, spec: EquationSpec, T: float | None = None,
                      tol: float = 1e-11, max_iter: int = 60) -> InteractionResult:
    """Interaction term w on the mesh of ``v_traj``, starting from w = 0.

    w = i ∫ U(t-τ) c[G(v + Uψ, w, 0) + G(v, Uψ, 0)] dτ for the power case, the
    Hartree analog with G̃. ``psi`` is the high part at the start of the window.
    """
    if v_traj.mesh is None or v_traj.node_values is None:
        raise ValueError("v trajectory must carry its Gauss-node values (keep_nodes=True)")
    g = v_traj.grid
    mesh = TimeMesh(v_traj.mesh.edges - v_traj.mesh.edges[0], v_traj.mesh.stages)
    if T is not None and abs(mesh.T - T) > 1e-12 * max(T, 1.0):
        raise ValueError(f"v trajectory covers [0, {mesh.T:g}], requested T = {T:g}")
    lin_nodes = _free_flow(psi.values, g, spec.beta, mesh.nodes)
    scale = max(l2_norm(v_traj.values[0], g), l2_norm(psi.values, g), 1e-300)
    try:
        z, ze, log = duhamel_picard(
            g, spec.beta, mesh, _interaction_forcing(spec, g, v_traj.node_values, lin_nodes),
            scale=scale, tol=tol, max_iter=max_iter, norm_qr=strichartz_exponent(spec),
        )
    except NonContractionError as exc:
        label = "combined/high norm"
        raise NonContractionError(
            f"window condition ({label}) violated numerically: {exc} (ratios {exc.ratios})", exc.ratios
        ) from exc
    traj = Trajectory(g, v_traj.mesh.edges.copy(), ze, v_traj.mesh, z)
    sup = float(max(np.max(l2_norm(ze, g)), np.max(l2_norm(z, g))))
    return InteractionResult(traj, log, float(l2_norm(ze[-1], g)), sup)


@dataclass(frozen=True)
class LedgerRow:
    k: int
    time: float                 # kT, start of the window
    window: float               # T(N)
    phi_l2: float               # ‖φ_k‖_{L²}
    w_prev_l2: float            # ‖w_{k-1}(kT)‖_{L²}
    psi_lin_mod: float          # ‖U(kT)ψ‖_{M^{r,r'}}
    window_bound: float         # existence window from the (φ, ψ) conditions
    window_ok: bool
    w_sup_l2: float             # ‖w_k‖_{L^∞_T L²}
    w_final_l2: float           # ‖w_k(T)‖_{L²}
    phi_next_l2: float          # ‖φ_{k+1}‖_{L²}
    chain_rhs: float            # ‖φ_0‖ + Σ_{j<=k} ‖w_j‖_{L^∞ L²}
    chain_ok: bool
    step_ok: bool               # ‖φ_{k+1}‖ <= ‖φ_k‖ + ‖w_k‖_{L^∞ L²}
    increment_constant: float   # ‖w_k‖_{L^∞ L²}·N / T^{κ or θ/4}
    growth_ratio: float         # ‖φ_{k+1}‖ / (N^γ + T^e (k+1)/N)
    composed_gap: float | None  # relative L² gap of v + w + Uψ vs direct solve
    iterations_v: int
    iterations_w: int
    max_ratio_w: float


CSV_COLUMNS = tuple(LedgerRow.__dataclass_fields__)


@dataclass(frozen=True, eq=False)
class IterationLedger:
    rows: tuple
    N: float
    window: float
    gamma: float
    split: dict
    exponents: dict
    status: str                 # "horizon", "k_max" or "stalled: <reason>"
    horizon: float
    growth_constant: float
    growth_ok: bool
    predicted_exponent: float
    predicted_horizon: float    # N^{horizon exponent}
    notes: tuple = ()

    @property
    def K(self) -> int:
        return len(self.rows)

    @property
    def achieved_horizon(self) -> float:
        return self.rows[-1].time + self.rows[-1].window if self.rows else 0.0

    @property
    def chain_ok(self) -> bool:
        return all(r.chain_ok and r.step_ok for r in self.rows)

    @property
    def max_composed_gap(self) -> float | None:
        gaps = [r.composed_gap for r in self.rows if r.composed_gap is not None]
        return max(gaps) if gaps else None

    def summary(self) -> dict:
        return {
            "K": self.K,
            "KT": self.achieved_horizon,
            "N": self.N,
            "window": self.window,
            "gamma": self.gamma,
            "status": self.status,
            "requested_horizon": self.horizon,
            "predicted_horizon_exponent": self.predicted_exponent,
            "predicted_horizon": self.predicted_horizon,
            "growth_constant": self.growth_constant,
            "growth_ok": self.growth_ok,
            "chain_ok": self.chain_ok,
            "max_composed_gap": self.max_composed_gap,
            "max_increment_constant": max((r.increment_constant for r in self.rows), default=0.0),
        }

    def to_dict(self) -> dict:
        return {
            "summary": self.summary(),
            "split": self.split,
            "exponents": self.exponents,
            "rows": [asdict(r) for r in self.rows],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\r\n")
        wr.writerow(CSV_COLUMNS)
        for r in self.rows:
            wr.writerow([_csv_cell(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def bourgain_iterate(
    u0: Field,
    spec: EquationSpec,
    p_or_s: float,
    N: float,
    horizon: float,
    C: float = 1.0,
    K_max: int = 64,
    *,
    part: ModulationPartition | None = None,
    radius: float | None = None,
    growth_constant: float | None = None,
    tol: float = 1e-11,
    subintervals: int = 8,
    stages: int = 3,
    direct_check: bool = True,
) -> IterationLedger:
    """Run the low/high iteration on windows of length T(N) up to ``horizon``.

    ``C`` is the window constant used for T(N) and for the per-step window
    conditions. ``growth_constant`` defaults to the smallest constant that
    makes the growth bound hold at step 0 and for the largest per-step
    increment, i.e. it is calibrated from the run and then reported.
    """
    g = u0.grid
    part = build_partition(g) if part is None else part
    ex = compute_exponents(spec, p_or_s)
    r = target_exponent(spec)
    sp = split_data(u0, p_or_s, r, N, part, radius)
    T = bourgain_window(ex, N, C)
    e_inc = ex.increment_exponent
    gamma = ex.gamma if spec.kind == "power" else ex.gamma_tilde
    rule = "power_split" if spec.kind == "power" else "hartree_split"
    notes = []
    if ex.flags:
        notes.extend(ex.flags)
    if not ex.in_range:
        notes.append(f"exponent {p_or_s:g} outside the admissible range; horizon exponent not positive")

    phi = sp.v.values
    psi0 = sp.w.values
    phi0_norm = l2_norm(phi, g)
    direct = u0.values
    rows = []
    w_prev = 0.0
    chain = phi0_norm
    status = "horizon"
    k = 0
    while k * T < horizon * (1 - 1e-12):
        if k >= K_max:
            status = "k_max"
            break
        t_k = k * T
        step = min(T, horizon - t_k)
        psi_k = propagate_array(psi0, g, spec.beta, t_k)
        phi_norm = l2_norm(phi, g)
        psi_norm = _mod(psi_k, part, r)
        wb = existence_window({"phi": phi_norm, "psi": psi_norm}, ex, rule, C).T
        try:
            ve = l2_global_evolve(Field(g, phi), spec, step, C=1.0, tol=tol,
                                  subintervals=subintervals, stages=stages, keep_nodes=True)
            inter = solve_interaction(ve.trajectory, Field(g, psi_k), spec, None, tol)
        except NonContractionError as exc:
            status = f"stalled: {exc}"
            logger.warning("iteration stalled at k=%d: %s", k, exc)
            break
        v_T = ve.trajectory.values[-1]
        w_T = inter.trajectory.values[-1]
        phi_next = v_T + w_T
        nxt = l2_norm(phi_next, g)
        chain += inter.sup_norm
        slack = 1e-9 * max(phi0_norm, 1.0)
        gap = None
        if direct_check:
            dres = picard_local_solve(Field(g, direct), spec, step, tol, subintervals=subintervals,
                                      stages=stages, mesh=ve.trajectory.mesh.shifted(-ve.trajectory.mesh.edges[0]),
                                      keep_nodes=False)
            direct = dres.trajectory.values[-1]
            composed = phi_next + propagate_array(psi0, g, spec.beta, t_k + step)
            gap = float(l2_norm(composed - direct, g) / l2_norm(direct, g))
        bound = N**gamma + T**e_inc * (k + 1) / N
        rows.append(LedgerRow(
            k=k, time=t_k, window=step, phi_l2=phi_norm, w_prev_l2=w_prev, psi_lin_mod=psi_norm,
            window_bound=wb, window_ok=bool(step <= wb), w_sup_l2=inter.sup_norm,
            w_final_l2=inter.final_norm, phi_next_l2=nxt, chain_rhs=chain,
            chain_ok=bool(nxt <= chain + slack), step_ok=bool(nxt <= phi_norm + inter.sup_norm + slack),
            increment_constant=inter.sup_norm * N / T**e_inc if T > 0 else 0.0,
            growth_ratio=nxt / bound, composed_gap=gap,
            iterations_v=sum(lg.iterations for lg in ve.logs), iterations_w=inter.log.iterations,
            max_ratio_w=inter.log.max_ratio,
        ))
        phi = phi_next
        w_prev = inter.final_norm
        k += 1

    # growth bound ‖φ_k‖ <= C_g (N^γ + T^e k/N)
    calibrated = max([phi0_norm / N**gamma] + [r_.increment_constant for r_ in rows])
    Cg = calibrated if growth_constant is None else float(growth_constant)
    growth_ok = all(r_.growth_ratio <= Cg * (1 + 1e-9) for r_ in rows)
    return IterationLedger(
        rows=tuple(rows), N=float(N), window=T, gamma=gamma,
        split={
            "cutoff": sp.cutoff, "phi0_l2": sp.measured_v_norm, "psi0_mod": sp.measured_w_norm,
            "source_mod": sp.source_norm, "p": sp.p, "r": sp.r,
        },
        exponents={k_: v for k_, v in asdict(ex).items() if k_ != "flags"},
        status=status, horizon=float(horizon), growth_constant=Cg, growth_ok=growth_ok,
        predicted_exponent=ex.horizon_exponent, predicted_horizon=N**ex.horizon_exponent,
        notes=tuple(notes),
    )
