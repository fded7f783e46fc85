"""
Admissible pairs and empirical constants of the dispersive estimates.

Constants are measured as maxima of norm ratios over a sample family and are
called stable when doubling the grid resolution and the number of time
snapshots changes the maximum by at most 10%.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import Field, Grid, fft, ifft, l2_norm, lp_norm, make_grid
from .modulation import conjugate
from .nonlinearity import _G, riesz_symbol
from .propagator import dispersion_symbol
from .solver import TimeMesh, Trajectory, duhamel_picard, mesh_spacetime_norm, spacetime_norm

__all__ = [
    "AdmissiblePair",
    "admissible_q",
    "admissible_pair",
    "refine_field",
    "enlarge_field",
    "StrichartzStats",
    "strichartz_constant",
    "inhomogeneous_constant",
    "duhamel_bound_ratios",
    "hls_exponent",
    "hls_ratio",
    "riesz_direct",
    "hls_constant",
]


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float
    beta: float
    n: int

    def __post_init__(self):
        if self.q < 2 or self.r < 2:
            raise ValueError(f"admissible exponents must be >= 2, got (q, r) = ({self.q}, {self.r})")
        if math.isinf(self.q) and self.r == 2 and self.n == 2:
            raise ValueError("(q, r, n) = (inf, 2, 2) is excluded from the admissible set")
        lhs = 0.0 if math.isinf(self.q) else self.beta / self.q
        rhs = self.n * (0.5 - 1.0 / self.r)
        if abs(lhs - rhs) > 1e-12 * max(1.0, abs(rhs)):
            raise ValueError(
                f"(q, r) = ({self.q}, {self.r}) violates beta/q = n(1/2 - 1/r) for beta={self.beta}, n={self.n}"
            )

    @property
    def dual(self) -> tuple[float, float]:
        return conjugate(self.q), conjugate(self.r)


def admissible_q(r: float, beta: float, n: int) -> float | None:
    """q with β/q = n(1/2 - 1/r), or None if q < 2 or (q, r, n) = (∞, 2, 2)."""
    if r < 2:
        raise ValueError("r must be >= 2")
    s = n * (0.5 - 1.0 / r)
    q = math.inf if s == 0 else beta / s
    if q < 2:
        return None
    if math.isinf(q) and n == 2:
        return None
    return q


def admissible_pair(r: float, beta: float, n: int) -> AdmissiblePair | None:
    q = admissible_q(r, beta, n)
    return None if q is None else AdmissiblePair(q, r, beta, n)


def _pad_axis(fh: np.ndarray, ax: int, Mf: int) -> np.ndarray:
    M = fh.shape[ax]
    h = M // 2
    shape = list(fh.shape)
    shape[ax] = Mf
    out = np.zeros(shape, dtype=complex)

    def sl(a, b):
        idx = [slice(None)] * fh.ndim
        idx[ax] = slice(a, b)
        return tuple(idx)

    out[sl(0, h)] = fh[sl(0, h)]
    out[sl(Mf - h + 1, Mf)] = fh[sl(h + 1, M)]
    # the Nyquist bin is shared evenly between +M/2 and -M/2
    out[sl(h, h + 1)] = 0.5 * fh[sl(h, h + 1)]
    out[sl(Mf - h, Mf - h + 1)] = 0.5 * fh[sl(h, h + 1)]
    return out


def refine_field(f: Field, factor: int = 2) -> Field:
    """Spectral interpolation onto the grid with ``factor``·M points (same L).

    Zero padding of the DFT; exact for data band-limited to the coarse band.
    """
    g = f.grid
    G = make_grid(g.n, g.L, g.M * factor)
    fh = fft(f.values, g)
    for ax in range(g.n):
        fh = _pad_axis(fh, ax, G.M)
    return Field(G, ifft(fh, G) * factor**g.n, f.time)


def enlarge_field(f: Field) -> Field:
    """Zero-extend f onto [-2L, 2L)^n with the same spacing (2M points per axis)."""
    g = f.grid
    G = make_grid(g.n, 2 * g.L, 2 * g.M)
    out = np.zeros(G.shape, dtype=complex)
    sl = (slice(g.M // 2, g.M // 2 + g.M),) * g.n
    out[sl] = f.values
    return Field(G, out, f.time)


def _refinements(fields):
    """The family on the doubled grid (same box) and on the doubled box (same spacing)."""
    return [refine_field(f) for f in fields], [enlarge_field(f) for f in fields]


def _linear_snapshots(f: Field, beta: float, T: float, snapshots: int) -> Trajectory:
    g = f.grid
    lam = dispersion_symbol(g, beta)
    t = np.linspace(0.0, T, snapshots + 1)
    fh = fft(f.values, g)
    vals = ifft(np.exp(-1j * lam * t.reshape((-1,) + (1,) * g.n)) * fh, g)
    return Trajectory(g, t, vals)


def _family(family, grid: Grid | None = None) -> list[Field]:
    if callable(family):
        return list(family(grid))
    return list(family)


@dataclass(frozen=True)
class StrichartzStats:
    pair: tuple
    beta: float
    n: int
    max_ratio: float
    refined_max_ratio: float | None
    refinement_drift: float | None
    ratios: tuple
    quadrature_error: float

    @property
    def stable(self) -> bool:
        return self.refinement_drift is not None and self.refinement_drift <= 0.10

    def record(self) -> dict:
        return {
            "pair": [_num(v) for v in self.pair],
            "beta": self.beta,
            "n": self.n,
            "max_ratio": self.max_ratio,
            "refinement_drift": self.refinement_drift,
        }

    def to_json(self) -> str:
        return json.dumps(self.record(), sort_keys=True)


def _num(v):
    return "inf" if math.isinf(v) else v


def _require_pair(pair, beta, n) -> AdmissiblePair:
    if isinstance(pair, AdmissiblePair):
        return pair
    q, r = pair
    return AdmissiblePair(float(q), float(r), beta, n)


def _strichartz_ratios(fields, beta, q, r, T, snapshots):
    ratios, err = [], 0.0
    for f in fields:
        nf = l2_norm(f.values, f.grid)
        tr = _linear_snapshots(f, beta, T, snapshots)
        val, e = spacetime_norm(tr, q, r, with_error=True)
        ratios.append(val / nf)
        err = max(err, e / nf)
    return ratios, err


def strichartz_constant(family: Sequence[Field], beta: float, pair, T: float = 1.0,
                        snapshots: int = 64, refine: bool = True) -> StrichartzStats:
    """Max of ‖U(·)u0‖_{L^q_T L^r} / ‖u0‖_{L²} over the family.

    With ``refine`` the family is also evaluated on the doubled grid with
    doubled snapshots, and on the doubled box; the drift is the largest
    relative change of the maximum.
    """
    fields = _family(family)
    if not fields:
        raise ValueError("empty sample family")
    n = fields[0].grid.n
    ap = _require_pair(pair, beta, n)
    ratios, err = _strichartz_ratios(fields, beta, ap.q, ap.r, T, snapshots)
    mx = max(ratios)
    rmx = drift = None
    if refine:
        fine, big = _refinements(fields)
        rmx = max(_strichartz_ratios(fine, beta, ap.q, ap.r, T, 2 * snapshots)[0])
        bmx = max(_strichartz_ratios(big, beta, ap.q, ap.r, T, snapshots)[0])
        drift = max(abs(rmx - mx), abs(bmx - mx)) / mx
    return StrichartzStats((ap.q, ap.r), beta, n, mx, rmx, drift, tuple(ratios), err)


def _forced_duhamel(forcing_nodes: np.ndarray, grid: Grid, beta: float, mesh: TimeMesh):
    # Duhamel integral of a prescribed forcing: a single sweep is exact
    z, ze, _ = duhamel_picard(grid, beta, mesh, lambda _z: forcing_nodes, scale=1.0,
                              tol=np.inf, max_iter=1)
    return z, ze


def inhomogeneous_constant(family: Sequence[Field], beta: float, pair, dual_pair, T: float = 1.0,
                           subintervals: int = 16, refine: bool = True) -> StrichartzStats:
    """Max of ‖∫_0^t U(t-s)F(s)ds‖_{L^q L^r} / ‖F‖_{L^{q2'} L^{r2'}}.

    Forcings are F(x, t) = (1 + t/T)·f(x) for f in the family. The left side
    uses Gauss-node quadrature in time, as does the right side.
    """
    fields = _family(family)
    n = fields[0].grid.n
    ap = _require_pair(pair, beta, n)
    bp = _require_pair(dual_pair, beta, n)
    q2p, r2p = bp.dual

    def run(fs, S):
        out = []
        for f in fs:
            g = f.grid
            mesh = TimeMesh.uniform(T, S, 3)
            tfac = (1.0 + mesh.nodes / T).reshape(mesh.nodes.shape + (1,) * g.n)
            Fn = tfac * f.values
            z, _ = _forced_duhamel(Fn, g, beta, mesh)
            lhs = mesh_spacetime_norm(z, mesh, g, ap.q, ap.r)
            rhs = mesh_spacetime_norm(Fn, mesh, g, q2p, r2p)
            out.append(lhs / rhs)
        return out

    ratios = run(fields, subintervals)
    mx = max(ratios)
    rmx = drift = None
    if refine:
        fine, big = _refinements(fields)
        rmx = max(run(fine, 2 * subintervals))
        bmx = max(run(big, subintervals))
        drift = max(abs(rmx - mx), abs(bmx - mx)) / mx
    return StrichartzStats((ap.q, ap.r), beta, n, mx, rmx, drift, tuple(ratios), 0.0)


def duhamel_bound_ratios(u0: Field, v0: Field, w0: Field, alpha: float, beta: float,
                         Ts=(0.125, 0.25, 0.5, 1.0), subintervals: int = 16) -> dict:
    """Ratio of the Duhamel term of G(u, v, w) to its multilinear bound, per T.

    u, v, w are the free evolutions of the given data. Numerator:
    ‖∫_0^t U(t-s)G(u,v,w)ds‖ in max{L^∞L², L^{1/κ}L^{α+2}}; denominator:
    T^ω ‖v - w‖·(‖u‖^α + ‖v‖^α + ‖w‖^α) in the same norm.
    """
    g = u0.grid
    n = g.n
    omega = 1.0 - n * alpha / (2.0 * beta)
    kappa = n * alpha / (2.0 * beta * (alpha + 2.0))
    qr = (1.0 / kappa, alpha + 2.0)
    lam = dispersion_symbol(g, beta)

    def Ynorm(nodes, mesh):
        return max(mesh_spacetime_norm(nodes, mesh, g, math.inf, 2.0),
                   mesh_spacetime_norm(nodes, mesh, g, *qr))

    out = {}
    for T in Ts:
        mesh = TimeMesh.uniform(T, subintervals, 3)
        E = np.exp(-1j * lam * mesh.nodes.reshape(mesh.nodes.shape + (1,) * n))
        u, v, w = (ifft(E * fft(f.values, g), g) for f in (u0, v0, w0))
        z, _ = _forced_duhamel(_G(u, v, w, alpha), g, beta, mesh)
        den = T**omega * Ynorm(v - w, mesh) * (Ynorm(u, mesh) ** alpha + Ynorm(v, mesh) ** alpha
                                               + Ynorm(w, mesh) ** alpha)
        out[float(T)] = Ynorm(z, mesh) / den
    return out


def hls_exponent(n: int, nu: float, p: float) -> float:
    """q with 1/p + ν/n = 1 + 1/q."""
    inv = 1.0 / p + nu / n - 1.0
    if not 0 < inv < 1:
        raise ValueError(f"no HLS exponent for p={p}, nu={nu}, n={n}")
    return 1.0 / inv


def _cell_average_constant(n: int, nu: float) -> float:
    """∫ over [-1/2, 1/2]^n of |y|^{-ν} dy.

    By the divergence theorem applied to y|y|^{-ν} this is a smooth integral
    over one face: (n/(n-ν)) ∫_{[-1/2,1/2]^{n-1}} (1/4 + |y'|²)^{-ν/2} dy'.
    """
    from scipy import integrate

    if n == 1:
        face = 0.5 ** (-nu)
    elif n == 2:
        face = integrate.quad(lambda y: (0.25 + y * y) ** (-nu / 2), -0.5, 0.5, epsabs=1e-14)[0]
    else:
        face = integrate.dblquad(lambda y, z: (0.25 + y * y + z * z) ** (-nu / 2),
                                 -0.5, 0.5, -0.5, 0.5, epsabs=1e-13)[0]
    return n / (n - nu) * face


def riesz_direct(f: Field, nu: float) -> np.ndarray:
    """Aperiodic |x|^{-ν} * f on the grid of f by zero-padded FFT convolution.

    The kernel is sampled on the doubled box, where no wrap-around reaches the
    original box; the singular cell carries the exact cell average.
    """
    g = f.grid
    big = enlarge_field(f)
    G = big.grid
    r = np.asarray(G.radius)
    K = np.zeros(G.shape)
    nz = r > 0
    K[nz] = r[nz] ** (-nu)
    K[(G.M // 2,) * G.n] = _cell_average_constant(g.n, nu) * g.dx ** (-nu)
    K0 = np.fft.ifftshift(K)
    V = ifft(fft(big.values, G) * fft(K0, G), G) * g.cell_volume
    sl = (slice(g.M // 2, g.M // 2 + g.M),) * g.n
    return V[sl]


def hls_ratio(f: Field, nu: float, p: float, method: str = "direct") -> float:
    """‖|x|^{-ν} * f‖_{L^q} / ‖f‖_{L^p}, 1/p + ν/n = 1 + 1/q.

    ``method`` "direct" is the aperiodic real-space convolution, "spectral"
    the torus multiplier used by the solvers.
    """
    g = f.grid
    q = hls_exponent(g.n, nu, p)
    if method == "direct":
        V = riesz_direct(f, nu)
    elif method == "spectral":
        V = ifft(fft(f.values, g) * riesz_symbol(g, nu), g)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(lp_norm(V, g, q) / lp_norm(f.values, g, p))


@dataclass(frozen=True)
class HLSStats:
    n: int
    nu: float
    p: float
    q: float
    max_ratio: float
    refined_max_ratio: float
    enlarged_max_ratio: float
    refinement_drift: float


def hls_constant(family: Callable[[Grid], Sequence[Field]] | Sequence[Field], nu: float, p: float,
                 method: str = "direct") -> HLSStats:
    fields = _family(family)
    g = fields[0].grid
    mx = max(hls_ratio(f, nu, p, method) for f in fields)
    fine, big = _refinements(fields)
    rmx = max(hls_ratio(f, nu, p, method) for f in fine)
    bmx = max(hls_ratio(f, nu, p, method) for f in big)
    drift = max(abs(rmx - mx), abs(bmx - mx)) / mx
    return HLSStats(g.n, nu, p, hls_exponent(g.n, nu, p), mx, rmx, bmx, drift)
