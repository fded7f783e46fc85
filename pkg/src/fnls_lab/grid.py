"""
Periodic computational grid standing in for R^n, and its Fourier transforms.

The transform convention is the cycles convention f̂(ξ) = ∫ f(x) e^{-2πi ξ·x} dx,
so Fourier multipliers are written directly in terms of ξ (cycles per unit
length). Spatial nodes are x_j = (j - M/2)·dx, j = 0..M-1, which makes the
lattice exactly symmetric under x -> -x (index j -> (M - j) mod M).

Array-level helpers (``fft``/``ifft``) use the raw unnormalized DFT over the
last ``n`` axes and are what the solvers use internally; diagonal multipliers
commute with the centering phase, so no shift is needed there.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.fft

__all__ = [
    "Grid",
    "Field",
    "Spectrum",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "radial_profile",
    "lp_norm",
    "l2_norm",
    "reflect",
    "permute_axes",
    "fft",
    "ifft",
]


@dataclass(frozen=True)
class Grid:
    """Isotropic periodic grid on [-L, L)^n with M points per axis.

    Attributes:
        n: spatial dimension.
        L: half-extent per axis.
        M: points per axis (even, power of two).
    """

    n: int
    L: float
    M: int

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def dxi(self) -> float:
        """Frequency lattice spacing 1/(2L)."""
        return 1.0 / (2.0 * self.L)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.n

    @property
    def size(self) -> int:
        return self.M**self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.n

    @property
    def band_edge(self) -> float:
        """Largest |ξ_i| represented on the lattice, M/(4L)."""
        return self.M / (4.0 * self.L)

    @cached_property
    def x1d(self) -> np.ndarray:
        x = (np.arange(self.M) - self.M // 2) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def xi1d(self) -> np.ndarray:
        """Frequencies in DFT order, cycles per unit length."""
        xi = scipy.fft.fftfreq(self.M, d=self.dx)
        xi.setflags(write=False)
        return xi

    def axes(self, arr_ndim: int | None = None) -> tuple[int, ...]:
        """The trailing ``n`` axes of an array with ``arr_ndim`` dimensions."""
        nd = self.n if arr_ndim is None else arr_ndim
        return tuple(range(nd - self.n, nd))

    def _broadcast(self, v: np.ndarray) -> list[np.ndarray]:
        out = []
        for i in range(self.n):
            shp = [1] * self.n
            shp[i] = self.M
            out.append(v.reshape(shp))
        return out

    @cached_property
    def x(self) -> list[np.ndarray]:
        """Sparse (broadcastable) coordinate arrays, one per axis."""
        return self._broadcast(self.x1d)

    @cached_property
    def xi(self) -> list[np.ndarray]:
        """Sparse (broadcastable) frequency arrays, one per axis, DFT order."""
        return self._broadcast(self.xi1d)

    @cached_property
    def radius(self) -> np.ndarray:
        r2 = sum(c * c for c in self.x)
        r = np.sqrt(np.broadcast_to(r2, self.shape))
        r.setflags(write=False)
        return r

    @cached_property
    def xi_abs(self) -> np.ndarray:
        """|ξ| on the full frequency lattice (DFT order)."""
        k2 = sum(c * c for c in self.xi)
        k = np.sqrt(np.broadcast_to(k2, self.shape))
        k.setflags(write=False)
        return k

    @cached_property
    def _phase(self) -> np.ndarray:
        # (-1)^(j_1+...+j_n): maps the DFT of centered samples to the
        # continuum transform sampled at the lattice frequencies.
        s = np.where(np.arange(self.M) % 2 == 0, 1.0, -1.0)
        ph = np.ones(self.shape)
        for c in self._broadcast(s):
            ph = ph * c
        ph.setflags(write=False)
        return ph


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of u(·, t) on a grid."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("field contains non-finite samples")
        object.__setattr__(self, "values", _frozen(vals))

    def with_values(self, values: np.ndarray, time: float | None = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)

    def norm(self, p: float = 2.0) -> float:
        return lp_norm(self.values, self.grid, p)

    def mass(self) -> float:
        return l2_norm(self.values, self.grid) ** 2

    def __add__(self, other: "Field") -> "Field":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Continuum-normalized Fourier coefficients on the frequency lattice (DFT order)."""

    grid: Grid
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError("coefficient shape does not match grid")
        object.__setattr__(self, "coeffs", _frozen(c))

    def norm(self) -> float:
        """ℓ² norm with the frequency measure dξ^n."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * self.grid.dxi**self.grid.n))


def make_grid(n: int, L: float, M: int) -> Grid:
    if n not in (1, 2, 3):
        raise ValueError(f"dimension n must be 1, 2 or 3, got {n}")
    if not L > 0:
        raise ValueError(f"half-extent L must be positive, got {L}")
    if M % 2 != 0:
        raise ValueError(f"M must be even, got {M}")
    if M < 8 or M & (M - 1):
        raise ValueError(f"M must be a power of two >= 8, got {M}")
    return Grid(int(n), float(L), int(M))


def fft(a: np.ndarray, grid: Grid) -> np.ndarray:
    """Unnormalized forward DFT over the trailing ``grid.n`` axes."""
    return scipy.fft.fftn(a, axes=grid.axes(a.ndim))


def ifft(a: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse of :func:`fft`."""
    return scipy.fft.ifftn(a, axes=grid.axes(a.ndim))


def forward_transform(f: Field) -> Spectrum:
    g = f.grid
    coeffs = fft(f.values, g) * g._phase * g.cell_volume
    return Spectrum(g, coeffs, f.time)


def inverse_transform(F: Spectrum) -> Field:
    g = F.grid
    vals = ifft(F.coeffs * g._phase, g) / g.cell_volume
    return Field(g, vals, F.time)


def lp_norm(values: np.ndarray, grid: Grid, p: float = 2.0) -> float | np.ndarray:
    """Discrete L^p norm with the grid measure dx^n over the trailing axes.

    Leading axes (e.g. time) are kept, so a trajectory array yields one norm
    per snapshot.
    """
    axes = grid.axes(np.ndim(values))
    a = np.abs(values)
    if np.isinf(p):
        out = np.max(a, axis=axes)
    elif p == 2:
        out = np.sqrt(np.sum(a * a, axis=axes) * grid.cell_volume)
    else:
        out = (np.sum(a**p, axis=axes) * grid.cell_volume) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def l2_norm(values: np.ndarray, grid: Grid) -> float | np.ndarray:
    return lp_norm(values, grid, 2.0)


def reflect(a: np.ndarray, axis: int) -> np.ndarray:
    """Lattice reflection x -> -x along ``axis`` (index j -> (M - j) mod M)."""
    return np.roll(np.flip(a, axis=axis), 1, axis=axis)


def permute_axes(a: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    return np.transpose(a, perm)


_PROFILES = ("gaussian", "sech-bump", "ring")


def radial_profile(grid: Grid, kind: str, amplitude: float = 1.0, **params) -> Field:
    """Radial datum on the grid.

    Kinds and parameters:
        gaussian  (a=1): amplitude * exp(-π |x|²/a²)
        sech-bump (a=1): amplitude * sech(|x|/a)
        ring      (r0, sigma): amplitude * exp(-(|x| - r0)²/(2σ²))

    The width parameter (a or sigma) must be at least 4·dx.
    """
    r = grid.radius
    if kind == "gaussian":
        a = float(params.get("a", 1.0))
        _check_width(a, grid)
        vals = np.exp(-np.pi * (r / a) ** 2)
    elif kind == "sech-bump":
        a = float(params.get("a", 1.0))
        _check_width(a, grid)
        vals = 1.0 / np.cosh(r / a)
    elif kind == "ring":
        r0 = float(params.get("r0", 2.0))
        sigma = float(params.get("sigma", 0.5))
        if r0 < 0:
            raise ValueError("ring radius r0 must be nonnegative")
        _check_width(sigma, grid)
        vals = np.exp(-((r - r0) ** 2) / (2.0 * sigma**2))
    else:
        raise ValueError(f"unknown profile kind {kind!r}; expected one of {_PROFILES}")
    return Field(grid, amplitude * vals)


def _check_width(w: float, grid: Grid) -> None:
    if not w > 0:
        raise ValueError(f"profile width must be positive, got {w}")
    if w < 4 * grid.dx:
        raise ValueError(
            f"profile width {w} is under-resolved: need at least 4*dx = {4 * grid.dx}"
        )
