import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fnls_lab.families import gaussian_family, modulated_gaussians
from fnls_lab.grid import make_grid, radial_profile
from fnls_lab.modulation import (
    LebesgueSpec,
    ModNormSpec,
    box_piece,
    build_partition,
    conjugate,
    embedding_check,
    mod_norm,
    smoothstep,
)


def dense_sigma(grid, k):
    """Independent construction of σ_k on the full lattice from the bump formula."""
    xi = np.fft.fftfreq(grid.M, grid.dx)
    mesh = np.meshgrid(*([xi] * grid.n), indexing="ij")

    def rho(c):
        d = np.max([np.abs(m - ci) for m, ci in zip(mesh, c)], axis=0)
        s = np.clip(2 * (d - 0.5), 0, 1)
        return 1 - (10 * s**3 - 15 * s**4 + 6 * s**5)

    span = range(-int(xi.max()) - 2, int(xi.max()) + 3)
    total = sum(rho(c) for c in itertools.product(span, repeat=grid.n))
    return rho(k) / total


def brute_mod_norm(values, grid, p, q):
    fhat = np.fft.fftn(values)
    kmax = int(math.floor(grid.M / (4 * grid.L))) + 1
    acc = []
    for k in itertools.product(range(-kmax, kmax + 1), repeat=grid.n):
        piece = np.fft.ifftn(dense_sigma(grid, k) * fhat)
        acc.append((np.sum(np.abs(piece) ** p) * grid.dx**grid.n) ** (1 / p))
    acc = np.array(acc)
    return float(np.max(acc)) if math.isinf(q) else float(np.sum(acc**q) ** (1 / q))


class TestSmoothstep:
    def test_endpoints_and_midpoint(self):
        x = np.array([0.0, 0.5, 1.0])
        for order in (1, 2, 3):
            assert np.allclose(smoothstep(x, order), [0, 0.5, 1])

    def test_quintic(self):
        x = np.linspace(0, 1, 11)
        assert np.allclose(smoothstep(x, 2), 10 * x**3 - 15 * x**4 + 6 * x**5)

    def test_conjugate(self):
        assert conjugate(2) == 2
        assert conjugate(3) == 1.5
        assert conjugate(1) == math.inf
        assert conjugate(math.inf) == 1.0


class TestPartition:
    def test_frozen_values_1d(self):
        # at ξ = 0.75: ρ_0 = 1/2 and ρ_1 = 1, so σ_0 = 1/3 and σ_1 = 2/3
        g = make_grid(1, 2.0, 32)
        part = build_partition(g)
        i = 3
        assert g.xi1d[i] == 0.75
        assert part.sigma((0,))[i] == pytest.approx(1 / 3, abs=1e-15)
        assert part.sigma((1,))[i] == pytest.approx(2 / 3, abs=1e-15)

    @pytest.mark.parametrize("n,L,M", [(1, 2.0, 32), (2, 4.0, 64), (3, 2.0, 32)])
    def test_partition_of_unity(self, n, L, M):
        part = build_partition(make_grid(n, L, M))
        total = sum(part.sigma(k) for k in part.blocks)
        assert np.max(np.abs(total - 1)) < 1e-12

    def test_matches_dense_construction(self):
        g = make_grid(2, 2.0, 32)
        part = build_partition(g)
        for k in [(0, 0), (1, -2), (3, 3), (-4, 0)]:
            assert np.max(np.abs(part.sigma(k) - dense_sigma(g, k))) < 1e-14

    def test_sigma_nonnegative_and_bounded(self, grid2_small):
        part = build_partition(grid2_small)
        for k in part.blocks:
            s = part.sigma(k)
            assert s.min() >= 0 and s.max() <= 1 + 1e-15

    def test_rejects_coarse_grids(self):
        with pytest.raises(ValueError, match="L >= 2"):
            build_partition(make_grid(2, 1.0, 64))
        with pytest.raises(ValueError, match="K_max"):
            build_partition(make_grid(2, 8.0, 64))

    def test_index_outside_set(self, grid2_small):
        part = build_partition(grid2_small)
        with pytest.raises(KeyError):
            box_piece(radial_profile(grid2_small, "gaussian"), part, (part.kmax + 1, 0))


class TestNorms:
    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_reconstruction(self, seed):
        g = make_grid(2, 4.0, 64)
        part = build_partition(g)
        f = modulated_gaussians(g, 1, seed=seed)[0]
        acc = sum(box_piece(f, part, k).values for k in part.blocks)
        assert np.max(np.abs(acc - f.values)) < 1e-12

    @pytest.mark.parametrize("p,q", [(3, 1.5), (2, 2), (1, math.inf), (4, 4 / 3)])
    def test_against_brute_force(self, p, q):
        g = make_grid(2, 2.0, 32)
        part = build_partition(g)
        f = modulated_gaussians(g, 1, seed=11)[0]
        fast = mod_norm(f, part, ModNormSpec(p, q))
        slow = brute_mod_norm(f.values, g, p, q)
        assert fast == pytest.approx(slow, rel=1e-12)

    def test_batch_axes(self, grid2_small):
        from fnls_lab.modulation import mod_norm_array

        part = build_partition(grid2_small)
        fs = modulated_gaussians(grid2_small, 3, seed=2)
        stacked = np.stack([f.values for f in fs])
        batch = mod_norm_array(stacked, part, 3, 1.5)
        single = [mod_norm(f, part, ModNormSpec(3, 1.5)) for f in fs]
        assert np.allclose(batch, single, rtol=1e-13)

    def test_homogeneous_and_translation_invariant(self, grid2_small):
        part = build_partition(grid2_small)
        f = modulated_gaussians(grid2_small, 1, seed=5)[0]
        spec = ModNormSpec(3, 1.5)
        base = mod_norm(f, part, spec)
        assert mod_norm(f * (2 - 1j), part, spec) == pytest.approx(abs(2 - 1j) * base, rel=1e-13)
        shifted = f.with_values(np.roll(f.values, 5, axis=0))
        assert mod_norm(shifted, part, spec) == pytest.approx(base, rel=1e-12)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ModNormSpec(0.5, 2)
        with pytest.raises(ValueError):
            ModNormSpec(2, 2, s=1.0)
        with pytest.raises(ValueError):
            LebesgueSpec(0.9)


@pytest.fixture(scope="module")
def family():
    g = make_grid(2, 4.0, 64)
    return build_partition(g), modulated_gaussians(g, 4, seed=3) + gaussian_family(g, widths=(0.75, 1.5))


class TestEmbeddings:
    @pytest.mark.parametrize("source,target", [
        (ModNormSpec(3, 1.5), LebesgueSpec(3)),
        (LebesgueSpec(3), ModNormSpec(3, 3)),
        (ModNormSpec(2, 1), ModNormSpec(3, 2)),
        (ModNormSpec(2, 2), LebesgueSpec(2)),
    ])
    def test_covered_embeddings_bounded(self, family, source, target):
        part, fam = family
        ratio = embedding_check(source, target, fam, part)
        assert 0 < ratio < 4.0

    @pytest.mark.parametrize("source,target", [
        (ModNormSpec(3, 3), LebesgueSpec(3)),
        (LebesgueSpec(3), ModNormSpec(3, 1.5)),
        (ModNormSpec(3, 1), ModNormSpec(2, 2)),
        (LebesgueSpec(2), LebesgueSpec(3)),
        (ModNormSpec(3, 1.5), LebesgueSpec(2)),
    ])
    def test_uncovered_embeddings_rejected(self, family, source, target):
        part, fam = family
        with pytest.raises(ValueError, match="embedding hypothesis violated"):
            embedding_check(source, target, fam, part)
