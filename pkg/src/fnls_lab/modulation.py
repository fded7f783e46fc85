"""
Frequency-uniform decomposition and modulation-space norms.

The bump ρ is a function of |ξ|_∞ only: 1 on |ξ|_∞ <= 1/2, 0 on |ξ|_∞ >= 1,
joined by a polynomial smoothstep. Each σ_k = ρ_k / Σ_l ρ_l is stored as a
dense block over its support box, together with the per-axis lattice indices
of that box, so applying □_k costs one block multiply plus an inverse DFT.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .grid import Field, Grid, fft, ifft, lp_norm

__all__ = [
    "smoothstep",
    "ModNormSpec",
    "LebesgueSpec",
    "ModulationPartition",
    "build_partition",
    "box_piece",
    "piece_norms",
    "mod_norm",
    "mod_norm_array",
    "embedding_check",
    "conjugate",
]


def conjugate(p: float) -> float:
    """Hölder conjugate p' with 1/p + 1/p' = 1."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def smoothstep(x: np.ndarray, order: int = 2) -> np.ndarray:
    """Polynomial smoothstep S_N on [0, 1] (N = order; 1 cubic, 2 quintic, ...)."""
    x = np.clip(x, 0.0, 1.0)
    N = int(order)
    out = np.zeros_like(x, dtype=float)
    for k in range(N + 1):
        out += math.comb(N + k, k) * math.comb(2 * N + 1, N - k) * (-x) ** k
    return out * x ** (N + 1)


def _bump(d: np.ndarray, order: int) -> np.ndarray:
    # ρ as a function of the sup-distance d = |ξ - k|_∞
    return 1.0 - smoothstep(2.0 * (d - 0.5), order)


@dataclass(frozen=True)
class ModNormSpec:
    p: float
    q: float
    s: float = 0.0

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError(f"modulation exponents must satisfy p, q >= 1; got p={self.p}, q={self.q}")
        if self.s != 0:
            raise ValueError("only unweighted norms (s = 0) are supported")


@dataclass(frozen=True)
class LebesgueSpec:
    p: float

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError("Lebesgue exponent must be >= 1")


@dataclass(frozen=True, eq=False)
class ModulationPartition:
    grid: Grid
    order: int
    kmax: int
    index_set: tuple[tuple[int, ...], ...]
    blocks: dict = field(repr=False)  # k -> (per-axis index arrays, σ_k block)

    def sigma(self, k: Sequence[int]) -> np.ndarray:
        """σ_k sampled on the full lattice (DFT order)."""
        k = self._check(k)
        full = np.zeros(self.grid.shape)
        if k in self.blocks:
            idx, blk = self.blocks[k]
            full[np.ix_(*idx)] = blk
        return full

    def _check(self, k) -> tuple[int, ...]:
        k = tuple(int(v) for v in k)
        if len(k) != self.grid.n or max(abs(v) for v in k) > self.kmax:
            raise KeyError(f"index {k} outside the partition index set |k|_inf <= {self.kmax}")
        return k


def build_partition(grid: Grid, transition_profile: int = 2) -> ModulationPartition:
    """Partition of unity {σ_k} on the grid's frequency lattice.

    ``transition_profile`` is the smoothstep order (2 = quintic).
    """
    if 2.0 * grid.L < 4:
        raise ValueError(
            f"grid resolves only {2 * grid.L:g} frequency samples per unit box; need at least 4 (L >= 2)"
        )
    kmax = int(math.floor(grid.M / (4.0 * grid.L))) + 1
    if kmax < 4:
        raise ValueError(f"frequency band too narrow for the partition (K_max = {kmax} < 4)")
    xi = np.asarray(grid.xi1d)
    rng1 = range(-kmax, kmax + 1)

    # per-axis support indices and distances for each integer centre
    axis_idx = {}
    for k in rng1:
        idx = np.nonzero(np.abs(xi - k) < 1.0)[0]
        axis_idx[k] = (idx, np.abs(xi[idx] - k))

    raw = {}
    total = np.zeros(grid.shape)
    for k in itertools.product(rng1, repeat=grid.n):
        idxs = [axis_idx[ki][0] for ki in k]
        if any(len(i) == 0 for i in idxs):
            continue
        dists = [axis_idx[ki][1] for ki in k]
        d = dists[0].reshape((-1,) + (1,) * (grid.n - 1))
        for ax in range(1, grid.n):
            shp = [1] * grid.n
            shp[ax] = -1
            d = np.maximum(d, dists[ax].reshape(shp))
        rho = _bump(d, transition_profile)
        if not np.any(rho > 0):
            continue
        raw[k] = (idxs, rho)
        total[np.ix_(*idxs)] += rho

    if np.any(total <= 0):
        raise ValueError("partition does not cover the frequency band")
    blocks = {}
    for k in sorted(raw):
        idxs, rho = raw[k]
        sig = rho / total[np.ix_(*idxs)]
        sig.setflags(write=False)
        blocks[k] = (tuple(idxs), sig)
    cube = tuple(itertools.product(rng1, repeat=grid.n))
    return ModulationPartition(grid, int(transition_profile), kmax, cube, blocks)


def _piece_from_hat(fhat: np.ndarray, part: ModulationPartition, k) -> np.ndarray:
    idx, blk = part.blocks[k]
    sel = np.ix_(*idx)
    # leading (batch) axes pass through untouched
    lead = (slice(None),) * (fhat.ndim - part.grid.n)
    buf = np.zeros_like(fhat)
    buf[lead + sel] = fhat[lead + sel] * blk
    return ifft(buf, part.grid)


def box_piece(f: Field, part: ModulationPartition, k: Sequence[int]) -> Field:
    """□_k f = F^{-1}[σ_k F f]."""
    k = part._check(k)
    if k not in part.blocks:
        return Field(f.grid, np.zeros(f.grid.shape, dtype=complex), f.time)
    return Field(f.grid, _piece_from_hat(fft(f.values, f.grid), part, k), f.time)


def piece_norms(values: np.ndarray, part: ModulationPartition, p: float) -> np.ndarray:
    """‖□_k f‖_{L^p} for every k in ``part.index_set`` (in that order).

    Leading axes of ``values`` are treated as a batch: the result has shape
    (len(index_set),) + batch_shape.
    """
    g = part.grid
    fhat = fft(values, g)
    batch = fhat.shape[: fhat.ndim - g.n]
    out = np.zeros((len(part.index_set),) + batch)
    for i, k in enumerate(part.index_set):
        if k not in part.blocks:
            continue
        idx, _ = part.blocks[k]
        lead = (slice(None),) * len(batch)
        if not np.any(fhat[lead + np.ix_(*idx)]):
            continue
        out[i] = lp_norm(_piece_from_hat(fhat, part, k), g, p)
    return out


def _lq(a: np.ndarray, q: float) -> np.ndarray:
    # fixed ordering along axis 0 keeps the reduction deterministic
    if math.isinf(q):
        return np.max(a, axis=0)
    return np.sum(a**q, axis=0) ** (1.0 / q)


def mod_norm_array(values: np.ndarray, part: ModulationPartition, p: float, q: float):
    return _lq(piece_norms(values, part, p), q)


def mod_norm(f: Field, part: ModulationPartition, spec: ModNormSpec) -> float:
    """‖f‖_{M^{p,q}} = ‖ ‖□_k f‖_{L^p} ‖_{ℓ^q_k}."""
    if spec.s != 0:
        raise ValueError("only s = 0 is supported")
    return float(mod_norm_array(f.values, part, spec.p, spec.q))


def _norm_of(f: Field, part: ModulationPartition, spec) -> float:
    if isinstance(spec, LebesgueSpec):
        return float(lp_norm(f.values, f.grid, spec.p))
    return mod_norm(f, part, spec)


def _embedding_hypothesis(source, target) -> str | None:
    """None if the embedding source -> target is covered, else the violated condition."""
    if source == target:
        return None
    if isinstance(source, ModNormSpec) and isinstance(target, LebesgueSpec):
        p, q1 = source.p, source.q
        if target.p != p:
            return "M^{p,q} -> L^r needs r = p"
        if q1 > min(p, conjugate(p)):
            return f"M^{{p,q1}} -> L^p needs q1 <= min(p, p') = {min(p, conjugate(p)):g}"
        return None
    if isinstance(source, LebesgueSpec) and isinstance(target, ModNormSpec):
        p, q2 = target.p, target.q
        if source.p != p:
            return "L^p -> M^{r,q} needs r = p"
        if q2 < max(p, conjugate(p)):
            return f"L^p -> M^{{p,q2}} needs q2 >= max(p, p') = {max(p, conjugate(p)):g}"
        return None
    if isinstance(source, ModNormSpec) and isinstance(target, ModNormSpec):
        if source.p <= target.p and source.q <= target.q:
            return None
        return "M^{p1,q1} -> M^{p2,q2} needs p1 <= p2 and q1 <= q2"
    return "L^p -> L^r is not an embedding on R^n unless r = p"


def embedding_check(
    source,
    target,
    sample_family: Iterable[Field],
    partition: ModulationPartition | None = None,
) -> float:
    """max over the family of ‖f‖_target / ‖f‖_source.

    ``source``/``target`` are :class:`ModNormSpec` or :class:`LebesgueSpec`.
    Raises ValueError when the pair is not a covered embedding.
    """
    why = _embedding_hypothesis(source, target)
    if why is not None:
        raise ValueError(f"embedding hypothesis violated: {why}")
    worst = 0.0
    part = partition
    for f in sample_family:
        if part is None:
            part = build_partition(f.grid)
        den = _norm_of(f, part, source)
        if den == 0:
            continue
        worst = max(worst, _norm_of(f, part, target) / den)
    return worst
