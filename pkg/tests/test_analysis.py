import math

import numpy as np
import pytest

from fnls_lab.analysis import (
    AdmissiblePair,
    _cell_average_constant,
    admissible_pair,
    admissible_q,
    duhamel_bound_ratios,
    enlarge_field,
    hls_constant,
    hls_exponent,
    hls_ratio,
    inhomogeneous_constant,
    refine_field,
    riesz_direct,
    strichartz_constant,
)
from fnls_lab.families import gaussian_family, modulated_gaussians, random_radial
from fnls_lab.grid import Field, make_grid, radial_profile


class TestAdmissible:
    def test_examples(self):
        assert admissible_q(4, 1.5, 2) == pytest.approx(3.0)
        assert admissible_q(2, 1.5, 2) is None
        assert math.isinf(admissible_q(2, 1.5, 3))
        assert admissible_q(2.1, 1.5, 2) == pytest.approx(31.5)
        # q below 2 is not admissible
        assert admissible_q(10, 1.5, 3) is None

    @pytest.mark.parametrize("n", [2, 3])
    def test_inverse_relation(self, n):
        for r in np.linspace(2.05, 12, 40):
            ap = admissible_pair(float(r), 1.5, n)
            if ap is not None:
                assert 1.5 / ap.q == pytest.approx(n * (0.5 - 1 / r), abs=1e-14)

    def test_pair_validation(self):
        assert AdmissiblePair(3.0, 4.0, 1.5, 2).dual == pytest.approx((1.5, 4 / 3))
        AdmissiblePair(math.inf, 2.0, 1.5, 3)
        with pytest.raises(ValueError, match="excluded"):
            AdmissiblePair(math.inf, 2.0, 1.5, 2)
        with pytest.raises(ValueError, match="violates"):
            AdmissiblePair(3.0, 5.0, 1.5, 2)
        with pytest.raises(ValueError):
            AdmissiblePair(1.5, 4.0, 1.5, 2)
        with pytest.raises(ValueError):
            admissible_q(1.5, 1.5, 2)


class TestRefinement:
    def test_refine_band_limited_exact(self):
        g = make_grid(2, 2.0, 16)
        x, y = np.meshgrid(g.x1d, g.x1d, indexing="ij")
        f = Field(g, np.cos(2 * np.pi * 0.75 * x) * np.exp(2j * np.pi * 0.5 * y))
        fine = refine_field(f)
        X, Y = np.meshgrid(fine.grid.x1d, fine.grid.x1d, indexing="ij")
        exact = np.cos(2 * np.pi * 0.75 * X) * np.exp(2j * np.pi * 0.5 * Y)
        assert np.max(np.abs(fine.values - exact)) < 1e-13

    def test_refine_preserves_norm(self, grid2_small):
        f = radial_profile(grid2_small, "gaussian", a=1.0)
        assert refine_field(f).norm() == pytest.approx(f.norm(), rel=1e-12)

    def test_enlarge(self, grid2_small):
        f = radial_profile(grid2_small, "gaussian", a=1.0)
        big = enlarge_field(f)
        assert big.grid.L == 8.0 and big.grid.dx == grid2_small.dx
        assert big.norm() == pytest.approx(f.norm(), rel=1e-14)
        assert np.array_equal(big.values[32:96, 32:96], f.values)


class TestStrichartz:
    def test_homogeneous_small(self):
        g = make_grid(2, 4.0, 64)
        st = strichartz_constant(gaussian_family(g, widths=(0.75, 1.0)), 1.5, (3, 4), T=1.0, snapshots=32)
        assert 0 < st.max_ratio < 5
        assert st.stable
        assert st.quadrature_error < 1e-2 * st.max_ratio
        assert '"pair": [3.0, 4.0]' in st.to_json()

    def test_energy_pair_is_exact(self):
        g = make_grid(3, 2.0, 32)
        st = strichartz_constant(gaussian_family(g, widths=(1.0,)), 1.5, (math.inf, 2), refine=False)
        assert st.max_ratio == pytest.approx(1.0, rel=1e-12)

    def test_schrodinger_nonradial_bounded(self):
        # β = 2 needs no radial symmetry; (4, 4) is admissible in two dimensions
        g = make_grid(2, 4.0, 64)
        st = strichartz_constant(modulated_gaussians(g, 3, seed=9), 2.0, (4, 4), T=0.5, snapshots=32)
        assert 0 < st.max_ratio < 5 and st.stable

    def test_rejections(self):
        g = make_grid(2, 4.0, 64)
        fam = gaussian_family(g, widths=(1.0,))
        with pytest.raises(ValueError):
            strichartz_constant(fam, 1.5, (math.inf, 2))
        with pytest.raises(ValueError):
            strichartz_constant([], 1.5, (3, 4))

    def test_inhomogeneous_small(self):
        g = make_grid(2, 4.0, 32)
        st = inhomogeneous_constant(gaussian_family(g, widths=(1.0,)), 1.5, (3, 4), (3, 4),
                                    subintervals=8, refine=False)
        assert 0 < st.max_ratio < 5

    def test_duhamel_ratios_bounded(self):
        g = make_grid(2, 8.0, 64)
        u, v, w = random_radial(g, 3, seed=4)
        out = duhamel_bound_ratios(u, v, w, 1.0, 1.5, Ts=(0.125, 0.5), subintervals=8)
        assert set(out) == {0.125, 0.5}
        assert all(0 < r < 1 for r in out.values())


class TestHLS:
    def test_exponent(self):
        assert hls_exponent(2, 1.0, 1.0) == pytest.approx(2.0)
        assert hls_exponent(3, 1.2, 1.2) == pytest.approx(1 / (1 / 1.2 + 0.4 - 1))
        with pytest.raises(ValueError):
            hls_exponent(2, 1.0, 2.0)

    def test_cell_average_closed_form(self):
        # ∫_{[-1/2,1/2]²} |y|^{-1} dy = 4 log(1 + √2)
        assert _cell_average_constant(2, 1.0) == pytest.approx(4 * math.log(1 + math.sqrt(2)), rel=1e-13)
        assert _cell_average_constant(1, 0.5) == pytest.approx(2 * 0.5**0.5 / 0.5, rel=1e-14)

    def test_direct_convolution_first_order(self):
        # (|x|^{-1} * exp(-π|x|²))(0) = π in two dimensions
        errs = []
        for M in (64, 128):
            g = make_grid(2, 4.0, M)
            V = riesz_direct(radial_profile(g, "gaussian", a=1.0), 1.0)
            errs.append(abs(V[M // 2, M // 2] - math.pi))
        assert errs[0] < 0.05
        assert 1.8 < errs[0] / errs[1] < 2.2

    def test_ratio_and_stability(self):
        g = make_grid(2, 4.0, 32)
        st = hls_constant(gaussian_family(g, widths=(1.0,)), 1.0, 1.2)
        assert 0 < st.max_ratio < 10
        assert st.refinement_drift <= 0.10

    def test_unknown_method(self, grid2_small):
        with pytest.raises(ValueError):
            hls_ratio(radial_profile(grid2_small, "gaussian"), 1.0, 1.2, method="quad")
