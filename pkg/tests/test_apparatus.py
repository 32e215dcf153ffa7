"""Hardware mapping, measurement schedules, POVM elements, count simulation."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.constants import hbar

import wavetomo as wt

import oracles
from conftest import random_mixed_state


@pytest.fixture(scope="module")
def physical():
    return wt.PhysicalConfig()


class TestHardwareMapping:
    def test_kick_pair_is_proportional(self, physical):
        dp, dx = wt.kicks_from_hardware(0.05, 2.0, physical)
        # dx = dp L / p0 for any field and length
        assert dx == pytest.approx(dp * 2.0 / physical.p0_si, rel=1e-12)

    def test_kicks_scale_linearly_with_field(self, physical):
        dp1, _ = wt.kicks_from_hardware(0.02, 1.0, physical)
        dp2, _ = wt.kicks_from_hardware(0.04, 1.0, physical)
        assert dp2 == pytest.approx(2.0 * dp1, rel=1e-12)

    def test_resolution_within_advertised_band(self, physical):
        dx_min, dp_min = wt.resolution_limits(0.1, 1.0, physical)
        assert abs(dx_min - 60e-6) / 60e-6 < 0.05
        assert abs(dp_min - hbar * 1e6) / (hbar * 1e6) < 0.05

    def test_resolution_duality(self, physical):
        # finest resolvable x times the largest momentum kick is exactly hbar
        dx_min, _ = wt.resolution_limits(0.1, 1.0, physical)
        dp_max, _ = wt.kicks_from_hardware(0.1, 1.0, physical)
        assert dx_min * dp_max == pytest.approx(hbar, rel=1e-12)

    def test_natural_kicks_are_dimensionless_rescalings(self, physical):
        dp_si, dx_si = wt.kicks_from_hardware(0.1, 1.0, physical)
        dp_nat, dx_nat = wt.natural_kicks(0.1, 1.0, physical)
        # the scale_x / hbar rescaling preserves the product up to hbar
        assert dp_nat * dx_nat == pytest.approx(dp_si * dx_si / hbar, rel=1e-12)


class TestSchedule:
    def test_cartesian_layout_plain_then_aux(self):
        sched = wt.make_schedule([0.1, 0.2], [1.0, 2.0, 3.0], with_aux=True, p0=5.0)
        assert len(sched) == 12
        plain = [s for s in sched.settings if not s.aux_phase]
        aux = [s for s in sched.settings if s.aux_phase]
        assert len(plain) == len(aux) == 6
        assert {(s.dp, s.dx) for s in plain} == {(s.dp, s.dx) for s in aux}

    def test_aux_needs_positive_p0(self):
        with pytest.raises(wt.ScheduleError):
            wt.make_schedule([0.1], [1.0], with_aux=True, p0=0.0)

    def test_duplicate_settings_rejected(self):
        s = wt.KickSetting(dp=0.1, dx=1.0)
        with pytest.raises(wt.ScheduleError):
            wt.Schedule(settings=(s, s))

    def test_aux_shift_is_quarter_period(self):
        sched = wt.make_schedule([0.1], [1.0], with_aux=True, p0=8.0)
        # exp(i delta p0) = i exactly when delta = pi / (2 p0)
        assert sched.aux_shift * 8.0 == pytest.approx(np.pi / 2, rel=1e-12)

    def test_hardware_schedule_records_scale(self, physical):
        sched = wt.make_hardware_schedule(
            [0.02, 0.04], [0.5, 1.0], physical, exposure=100.0
        )
        assert len(sched) == 4
        assert sched.p0 == pytest.approx(physical.p0_natural)
        assert sched.metadata["scale_x"] == physical.scale_x


class TestAliasing:
    def test_kick_beyond_nyquist_rejected(self, grid64, gauss128):
        rho64 = wt.density_from_pure(
            wt.make_gaussian(1.0, 0.0, 0.0, grid64)
        )
        bad = wt.KickSetting(dp=grid64.p_max * 1.5, dx=0.0)
        with pytest.raises(wt.KickAliasingError):
            wt.detect_probability(rho64, bad)

    def test_shift_beyond_half_extent_rejected(self, grid64):
        rho64 = wt.density_from_pure(wt.make_gaussian(1.0, 0.0, 0.0, grid64))
        bad = wt.KickSetting(dp=0.0, dx=13.0)
        with pytest.raises(wt.KickAliasingError):
            wt.detect_probability(rho64, bad)


class TestPovmElement:
    def test_zero_setting_is_exact_identity(self, grid64):
        pi = wt.povm_element(wt.KickSetting(dp=0.0, dx=0.0), grid64)
        assert np.array_equal(pi, np.eye(64, dtype=complex))

    @given(
        dp=st.floats(-4.0, 4.0),
        dx=st.floats(-8.0, 8.0),
        aux=st.booleans(),
    )
    def test_eigenvalues_live_in_unit_interval(self, dp, dx, aux):
        grid = wt.GridSpec(64, 24.0)
        s = wt.KickSetting(dp=dp, dx=dx, aux_phase=aux)
        pi = wt.povm_element(s, grid, p0=16.6667, aux_shift=np.pi / (2 * 16.6667))
        eig = np.linalg.eigvalsh(pi)
        assert eig.min() > -1e-10
        assert eig.max() < 1.0 + 1e-10

    def test_aux_element_differs_from_plain(self, grid64):
        plain = wt.povm_element(wt.KickSetting(dp=0.5, dx=2.0), grid64, p0=10.0)
        aux = wt.povm_element(
            wt.KickSetting(dp=0.5, dx=2.0, aux_phase=True),
            grid64,
            p0=10.0,
            aux_shift=np.pi / 20.0,
        )
        assert np.abs(plain - aux).max() > 1e-3


class TestProbabilities:
    def test_trace_form_equals_fast_path(self, grid128, rng):
        rho = random_mixed_state(grid128, rng)
        for _ in range(20):
            s = wt.KickSetting(
                dp=rng.uniform(-3, 3), dx=rng.uniform(-6, 6),
                aux_phase=bool(rng.integers(2)),
            )
            p0, shift = 16.6667, np.pi / (2 * 16.6667)
            fast = wt.detect_probability(rho, s, p0=p0, aux_shift=shift)
            pi = wt.povm_element(s, grid128, p0=p0, aux_shift=shift)
            slow = float(np.trace(pi @ rho.matrix).real)
            assert fast == pytest.approx(slow, abs=1e-12)

    def test_probability_matches_gamma_phase_formula(self, offset_gauss128):
        u, v, p0 = 1.2, -2.0, 7.0
        got = wt.detect_probability(offset_gauss128, wt.KickSetting(dp=u, dx=v), p0=p0)
        gamma = oracles.gaussian_gamma(u, v, 1.3, 0.4, -0.7)
        want = 0.5 + 0.5 * np.real(np.exp(1j * (u * v / 2 + v * p0)) * gamma)
        assert got == pytest.approx(float(want), abs=1e-10)

    def test_schedule_probabilities_align_with_settings(self, gauss128):
        sched = wt.make_schedule([0.3, 0.9], [1.0, -1.5], with_aux=True, p0=12.0)
        probs = wt.schedule_probabilities(gauss128, sched)
        assert probs.shape == (len(sched),)
        for i, s in enumerate(sched.settings):
            single = wt.detect_probability(
                gauss128, s, p0=sched.p0, aux_shift=sched.aux_shift
            )
            assert probs[i] == pytest.approx(single, abs=1e-12)


class TestCountSimulation:
    def test_noiseless_counts_are_expected_values(self, gauss128):
        sched = wt.make_schedule([0.5], [1.0, 2.0], exposure=1000.0)
        data = wt.noiseless_counts(gauss128, sched)
        probs = wt.schedule_probabilities(gauss128, sched)
        assert np.allclose(data.counts, 1000.0 * probs, atol=1e-9)

    def test_same_seed_reproduces_counts(self, gauss128):
        sched = wt.make_schedule([0.5, 1.0], [1.0, 2.0], exposure=500.0)
        a = wt.simulate_counts(gauss128, sched, seed=42)
        b = wt.simulate_counts(gauss128, sched, seed=42)
        assert np.array_equal(a.counts, b.counts)

    def test_different_seeds_decorrelate(self, gauss128):
        sched = wt.make_schedule(
            np.linspace(0.1, 2.0, 5), np.linspace(0.5, 3.0, 5), exposure=500.0
        )
        a = wt.simulate_counts(gauss128, sched, seed=1)
        b = wt.simulate_counts(gauss128, sched, seed=2)
        assert not np.array_equal(a.counts, b.counts)

    def test_counts_concentrate_at_high_exposure(self, gauss128):
        sched = wt.make_schedule([0.5], [1.0], exposure=1e6)
        data = wt.simulate_counts(gauss128, sched, seed=3)
        expect = 1e6 * wt.schedule_probabilities(gauss128, sched)[0]
        # six-sigma Poisson band
        assert abs(data.counts[0] - expect) < 6 * np.sqrt(expect)

    def test_count_length_must_match_schedule(self):
        sched = wt.make_schedule([0.5], [1.0, 2.0])
        with pytest.raises(wt.DatasetError):
            wt.CountDataset(schedule=sched, counts=np.array([1.0]))
