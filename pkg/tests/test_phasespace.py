"""State construction, coherence tables, and Wigner transforms."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

import wavetomo as wt
from wavetomo.phasespace import shift_columns, wrapped_diagonals

import oracles
from conftest import random_mixed_state


class TestLattice:
    def test_points_are_centered(self):
        lat = wt.Lattice(center=1.0, step=0.5, count=5)
        assert lat.points[lat.count // 2] == pytest.approx(1.0)
        assert np.allclose(np.diff(lat.points), 0.5)

    def test_from_points_round_trip(self):
        pts = wt.Lattice(center=-2.0, step=0.125, count=9).points
        lat = wt.Lattice.from_points(pts)
        assert np.allclose(lat.points, pts)

    def test_from_points_rejects_uneven_spacing(self):
        with pytest.raises(wt.NonUniformLatticeError):
            wt.Lattice.from_points(np.array([0.0, 1.0, 2.5]))


class TestGridSpec:
    def test_x_lattice_symmetric(self, grid64):
        assert grid64.x[grid64.n_points // 2] == 0.0
        assert grid64.x_step == pytest.approx(24.0 / 64)

    def test_p_max_is_nyquist(self, grid64):
        assert grid64.p_max == pytest.approx(np.pi / grid64.x_step)


class TestGaussianPacket:
    def test_moments_match_convention(self, grid128):
        # sigma_x = l and sigma_p = 1/(2l), the minimum-uncertainty pairing
        for l_coh in (0.7, 1.0, 1.5):
            rho = wt.density_from_pure(wt.make_gaussian(l_coh, 0.0, 0.0, grid128))
            m = wt.state_moments(rho)
            assert m["std_x"] == pytest.approx(l_coh, rel=1e-6)
            assert m["std_p"] == pytest.approx(0.5 / l_coh, rel=1e-6)

    def test_centers_land_where_asked(self, grid128):
        rho = wt.density_from_pure(wt.make_gaussian(1.0, 1.7, -0.9, grid128))
        m = wt.state_moments(rho)
        assert m["mean_x"] == pytest.approx(1.7, abs=1e-8)
        assert m["mean_p"] == pytest.approx(-0.9, abs=1e-8)

    def test_wide_packet_rejected(self, grid64):
        with pytest.raises(wt.GridSupportError):
            wt.make_gaussian(6.0, 0.0, 0.0, grid64)

    def test_fast_packet_rejected(self, grid64):
        with pytest.raises(wt.GridSupportError):
            wt.make_gaussian(1.0, 0.0, 50.0, grid64)

    def test_momentum_density_width(self, grid128):
        rho = wt.density_from_pure(wt.make_gaussian(1.0, 0.0, 0.5, grid128))
        ps, dens = wt.momentum_density(rho)
        dp = ps[1] - ps[0]
        mean = np.sum(ps * dens) * dp
        var = np.sum((ps - mean) ** 2 * dens) * dp
        assert mean == pytest.approx(0.5, abs=1e-8)
        assert np.sqrt(var) == pytest.approx(0.5, rel=1e-6)


class TestDensityMatrixValidation:
    def test_non_hermitian_rejected(self, grid64):
        bad = np.eye(64, dtype=complex) / 64
        bad[0, 1] = 0.3
        with pytest.raises(wt.ValidationError):
            wt.DensityMatrix(grid=grid64, matrix=bad)

    def test_wrong_trace_rejected(self, grid64):
        with pytest.raises(wt.ValidationError):
            wt.DensityMatrix(grid=grid64, matrix=np.eye(64, dtype=complex))

    def test_negative_spectrum_rejected(self, grid64):
        bad = np.diag(np.linspace(1.0, -0.02, 64)).astype(complex)
        bad /= np.trace(bad).real
        with pytest.raises(wt.ValidationError):
            wt.DensityMatrix(grid=grid64, matrix=bad)


class TestCoherence:
    @given(
        u=st.floats(-3.0, 3.0),
        v=st.floats(-5.0, 5.0),
        l_coh=st.floats(0.8, 1.4),
    )
    def test_chi_matches_closed_form(self, u, v, l_coh):
        grid = wt.GridSpec(128, 24.0)
        rho = wt.density_from_pure(wt.make_gaussian(l_coh, 0.3, -0.4, grid))
        got = wt.chi_of_state(rho, u, v)
        want = oracles.gaussian_chi(u, v, l_coh, 0.3, -0.4)
        assert abs(got - want) < 1e-10

    def test_gamma_against_independent_quadrature(self, offset_gauss128):
        for u, v in [(0.5, 1.0), (-1.2, 2.5), (2.0, -3.0), (0.0, 4.0)]:
            got = wt.gamma_of_state(offset_gauss128, u, v)
            want = oracles.gamma_by_quadrature(u, v, 1.3, 0.4, -0.7)
            assert abs(got - want) < 1e-10

    def test_gamma_peak_normalized(self, gauss128):
        assert wt.gamma_of_state(gauss128, 0.0, 0.0) == pytest.approx(1.0)

    @given(seed=st.integers(0, 10_000))
    def test_chi_conjugation_on_mixtures(self, seed):
        # wide box: the identity only bends where translated tails wrap
        grid = wt.GridSpec(128, 32.0)
        rng = np.random.default_rng(seed)
        rho = random_mixed_state(grid, rng)
        u = rng.uniform(-3.0, 3.0)
        v = rng.uniform(-5.0, 5.0)
        fwd = wt.chi_of_state(rho, u, v)
        bwd = wt.chi_of_state(rho, -u, -v)
        assert abs(bwd - np.conj(fwd)) < 1e-10

    def test_table_shape_and_orientation(self, gauss128):
        us = np.linspace(-2.0, 2.0, 7)
        vs = np.linspace(-3.0, 3.0, 5)
        table = wt.gamma_table(gauss128, us, vs)
        assert table.values.shape == (7, 5)
        # rows follow dp, columns follow dx
        single = wt.gamma_of_state(gauss128, us[6], vs[0])
        assert table.values[6, 0] == pytest.approx(single)


class TestStructuredContractions:
    def test_shift_generator_builds_translation(self, grid64):
        psi = wt.make_gaussian(1.0, 0.0, 0.0, grid64)
        shift = 3 * grid64.x_step
        gen = shift_columns(grid64, np.array([shift]))[0]
        idx = np.arange(64)
        # circulant built from the generator acts as psi(x) -> psi(x + shift)
        op = gen[(idx[:, None] - idx[None, :]) % 64]
        want = np.roll(psi.amplitudes, -3)
        assert np.allclose(op @ psi.amplitudes, want, atol=1e-12)

    def test_wrapped_diagonals_layout(self):
        m = np.arange(16, dtype=complex).reshape(4, 4)
        d = wrapped_diagonals(m)
        # row r holds matrix[(j - r) % n, j]
        assert d[0, 2] == m[2, 2]
        assert d[1, 0] == m[3, 0]
        assert d[3, 2] == m[3, 2]


class TestWigner:
    def test_gaussian_peak_and_integral(self, gauss128):
        lat_x = wt.Lattice(0.0, 0.15, 80)
        lat_p = wt.Lattice(0.0, 0.08, 80)
        w = wt.wigner_of_state(gauss128, lat_x, lat_p)
        assert w.values.max() == pytest.approx(1.0 / np.pi, rel=1e-4)
        assert w.integral() == pytest.approx(1.0, abs=1e-3)

    def test_matches_closed_form_off_center(self, offset_gauss128):
        lat_x = wt.Lattice(0.4, 0.12, 64)
        lat_p = wt.Lattice(-0.7, 0.06, 64)
        w = wt.wigner_of_state(offset_gauss128, lat_x, lat_p)
        want = oracles.gaussian_wigner(
            lat_x.points[:, None], lat_p.points[None, :], 1.3, 0.4, -0.7
        )
        assert np.abs(w.values - want).max() < 5e-6

    def test_cat_interference_structure(self):
        grid = wt.GridSpec(128, 32.0)
        cat = wt.make_cat(wt.make_gaussian(1.0, 0.0, 0.0, grid), 8.0)
        rho = wt.density_from_pure(cat)
        lat_x = wt.Lattice(-4.0, 0.125, 128)
        lat_p = wt.Lattice(0.0, 0.0625, 128)
        w = wt.wigner_of_state(rho, lat_x, lat_p)
        want = oracles.cat_wigner(
            lat_x.points[:, None], lat_p.points[None, :], 8.0
        )
        assert np.abs(w.values - want).max() < 1e-4
        assert wt.negativity_volume(w) > 0.25

    def test_marginals_recover_densities(self, gauss128):
        lat_x = wt.Lattice(0.0, grid_step := 24.0 / 128, 128)
        lat_p = wt.Lattice(0.0, 0.05, 120)
        w = wt.wigner_of_state(gauss128, lat_x, lat_p)
        p_marginal = w.values.sum(axis=1) * lat_p.step
        want = np.exp(-lat_x.points**2 / 2) / np.sqrt(2 * np.pi)
        assert np.abs(p_marginal - want).max() < 1e-4
        assert grid_step > 0


class TestDynamics:
    def test_free_flight_spreads_position_only(self, grid128):
        psi = wt.make_gaussian(1.0, 0.0, 0.0, wt.GridSpec(256, 160.0))
        out = wt.evolve_free(psi, 30.0)
        m = wt.state_moments(wt.density_from_pure(out))
        assert m["std_x"] == pytest.approx(oracles.evolved_sigma_x(30.0), rel=1e-6)
        assert m["std_p"] == pytest.approx(0.5, rel=1e-6)

    def test_evolution_beyond_grid_rejected(self, grid64):
        psi = wt.make_gaussian(1.0, 0.0, 0.0, grid64)
        with pytest.raises(wt.GridSupportError):
            wt.evolve_free(psi, 200.0)

    def test_translate_moves_the_packet(self, grid128):
        psi = wt.make_gaussian(1.0, 0.0, 0.0, grid128)
        moved = wt.WavePacket(grid=grid128, amplitudes=wt.translate(psi, -2.0))
        m = wt.state_moments(wt.density_from_pure(moved))
        assert m["mean_x"] == pytest.approx(2.0, abs=1e-8)

    def test_cat_humps_sit_at_both_sites(self):
        grid = wt.GridSpec(128, 32.0)
        cat = wt.make_cat(wt.make_gaussian(1.0, 0.0, 0.0, grid), 8.0)
        dens = wt.position_density(wt.density_from_pure(cat))
        x = grid.x
        hump_a = dens[np.argmin(np.abs(x))]
        hump_b = dens[np.argmin(np.abs(x + 8.0))]
        assert hump_a == pytest.approx(hump_b, rel=1e-6)
        # valley at x = -4 where the tails add: (2 e^{-4})^2 of the peak
        assert dens[np.argmin(np.abs(x + 4.0))] < 2e-3 * hump_a

    def test_cat_too_wide_rejected(self, grid64):
        base = wt.make_gaussian(1.0, 0.0, 0.0, grid64)
        with pytest.raises(wt.GridSupportError):
            wt.make_cat(base, 20.0)


class TestStateAlgebra:
    def test_purity_separates_pure_from_mixed(self, grid128, gauss128):
        # centers 5.5 sigma apart: cross term exp(-sep^2/4) ~ 5e-4
        other = wt.density_from_pure(wt.make_gaussian(1.0, 5.5, 0.0, grid128))
        blend = wt.mix([gauss128, other], [0.5, 0.5])
        assert wt.purity(gauss128) == pytest.approx(1.0, abs=1e-9)
        assert wt.purity(blend) == pytest.approx(0.5, abs=1e-3)

    def test_fidelity_extremes(self, grid128):
        left = wt.density_from_pure(wt.make_gaussian(1.0, -5.5, 0.0, grid128))
        right = wt.density_from_pure(wt.make_gaussian(1.0, 5.5, 0.0, grid128))
        assert wt.fidelity(left, left) == pytest.approx(1.0, abs=1e-9)
        # pure-state overlap exp(-11^2/4) is far below any numerical floor
        assert wt.fidelity(left, right) < 1e-9

    def test_fidelity_is_symmetric(self, grid128, gauss128):
        rng = np.random.default_rng(5)
        mixed = random_mixed_state(grid128, rng)
        # the two operator orderings agree to roughly sqrt(machine eps)
        assert wt.fidelity(gauss128, mixed) == pytest.approx(
            wt.fidelity(mixed, gauss128), abs=1e-7
        )

    def test_gaussian_has_no_negativity(self, gauss128):
        w = wt.wigner_of_state(gauss128, wt.Lattice(0.0, 0.15, 64), wt.Lattice(0.0, 0.08, 64))
        assert wt.negativity_volume(w) < 1e-8
