"""
Seeded sample families of test data.

All randomness goes through numpy's PCG64 bit generator seeded with an integer,
so a (family, seed) pair reproduces the same stream on any platform.
"""

from __future__ import annotations

import numpy as np

from .grid import Field, Grid, radial_profile

__all__ = [
    "rng",
    "gaussian_family",
    "modulated_gaussians",
    "gaussian_sums",
    "gaussian_mix",
    "random_radial",
]


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def gaussian_family(grid: Grid, widths=(0.75, 1.0, 1.5, 2.0), amplitude: float = 1.0) -> list[Field]:
    """Radial Gaussians exp(-π|x|²/a²) for each width a."""
    return [radial_profile(grid, "gaussian", amplitude=amplitude, a=a) for a in widths]


def modulated_gaussians(grid: Grid, count: int, seed: int = 0, max_freq: float | None = None) -> list[Field]:
    """Band-limited random data: Gaussians with random centre, width and frequency shift."""
    g = rng(seed)
    kmax = 0.5 * grid.band_edge if max_freq is None else max_freq
    wmin = max(4 * grid.dx, 0.5)
    out = []
    for _ in range(count):
        c = g.uniform(-grid.L / 3, grid.L / 3, size=grid.n)
        w = g.uniform(wmin, grid.L / 3)
        k = g.uniform(-kmax, kmax, size=grid.n)
        amp = g.uniform(0.5, 2.0) * np.exp(1j * g.uniform(0, 2 * np.pi))
        r2 = sum((xi - ci) ** 2 for xi, ci in zip(grid.x, c))
        phase = sum(ki * xi for ki, xi in zip(k, grid.x))
        vals = amp * np.exp(-np.pi * r2 / w**2) * np.exp(2j * np.pi * phase)
        out.append(Field(grid, np.broadcast_to(vals, grid.shape).astype(complex)))
    return out


def gaussian_sums(grid: Grid, count: int, terms: int = 3, seed: int = 0) -> list[Field]:
    """Nonnegative sums of radial Gaussians with random weights and widths."""
    g = rng(seed)
    wmin = max(4 * grid.dx, 0.5)
    out = []
    for _ in range(count):
        vals = np.zeros(grid.shape)
        for _ in range(terms):
            a = g.uniform(wmin, grid.L / 3)
            vals = vals + g.uniform(0.2, 1.0) * np.exp(-np.pi * grid.radius**2 / a**2)
        out.append(Field(grid, vals.astype(complex)))
    return out


def gaussian_mix(grid: Grid, widths=(2.0, 1.0, 0.5), weights=None, amplitude: float = 1.0) -> Field:
    """Radial datum Σ c_j exp(-π|x|²/a_j²) mixing several frequency scales.

    By default the weights c_j = a_j^{-n/2} give each scale equal L² mass, so
    the spectrum has a slowly decaying tail relative to a single Gaussian.
    """
    widths = tuple(float(a) for a in widths)
    if weights is None:
        weights = [a ** (-grid.n / 2.0) for a in widths]
    vals = np.zeros(grid.shape)
    for a, c in zip(widths, weights):
        if a < 4 * grid.dx:
            raise ValueError(f"width {a} under-resolved on this grid (need >= {4 * grid.dx:g})")
        vals = vals + c * np.exp(-np.pi * grid.radius**2 / a**2)
    return Field(grid, (amplitude * vals).astype(complex))


def random_radial(grid: Grid, count: int, seed: int = 0, terms: int = 3) -> list[Field]:
    """Radial data with random complex Gaussian-mix coefficients."""
    g = rng(seed)
    wmin = max(4 * grid.dx, 0.5)
    out = []
    for _ in range(count):
        widths = g.uniform(wmin, grid.L / 3, size=terms)
        coef = g.standard_normal(terms) + 1j * g.standard_normal(terms)
        vals = sum(c * np.exp(-np.pi * grid.radius**2 / a**2) for a, c in zip(widths, coef))
        out.append(Field(grid, np.asarray(vals, dtype=complex)))
    return out
