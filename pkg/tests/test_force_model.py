import math
import time

import numpy as np
import pytest

from conftest import count_interior_maxima, oracle_force, oracle_force_curve, oracle_period
from furhaptics.core import FurPatch, HandState, StrokeDirection
from furhaptics.errors import ContractError, DomainError, InputError
from furhaptics.force_model import (
    GROWTH_FREQUENCY_HZ,
    NEUTRAL_FREQUENCY_HZ,
    REVERSE_FREQUENCY_HZ,
    CycleState,
    contact_angle,
    cycle_period,
    growth_force,
    intensity_map,
    reverse_force,
    reverse_force_peak,
    select_frequency,
    tick,
)

L, H, B, K = 0.05, 0.01, 0.03, 2e-4


def make_patch(**kwargs):
    defaults = dict(
        extent=(0.6, 0.2), hair_length=L, hand_height=H, bundle_width=B, force_scale=K
    )
    defaults.update(kwargs)
    return FurPatch(**defaults)


class TestCyclePeriod:
    def test_measured_fur_parameters_give_about_8cm(self):
        # 5 cm hair at 1 cm clearance with 3 cm bundles.
        assert cycle_period(0.05, 0.01, 0.03) == pytest.approx(
            math.sqrt(0.0024) + 0.03, abs=1e-12
        )
        assert abs(cycle_period(0.05, 0.01, 0.03) - 0.08) < 0.0015

    def test_hand_near_tips_leaves_only_bundle_width(self):
        assert cycle_period(0.05, 0.05 - 1e-9, 0.03) == pytest.approx(0.03, abs=1e-5)

    def test_arbitrary_parameters_match_direct_arithmetic(self):
        expected = math.sqrt(0.13 * 0.13 - 0.05 * 0.05) + 0.02
        assert cycle_period(0.13, 0.05, 0.02) == pytest.approx(expected, abs=1e-15)

    def test_hand_above_tips_is_domain_error(self):
        with pytest.raises(DomainError):
            cycle_period(0.05, 0.05, 0.03)
        with pytest.raises(DomainError):
            cycle_period(0.05, 0.06, 0.03)


class TestContactAngle:
    def test_zero_at_cycle_start(self):
        assert contact_angle(0.0, L, H, B) == 0.0

    def test_ramp_midpoint_is_quarter_pi(self):
        ramp = math.sqrt(L * L - H * H)
        assert contact_angle(ramp / 2.0, L, H, B) == pytest.approx(math.pi / 4, abs=1e-12)

    def test_rubbing_plateau_is_half_pi(self):
        ramp = math.sqrt(L * L - H * H)
        assert contact_angle(ramp + B / 2.0, L, H, B) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_out_of_cycle_position_is_contract_violation(self):
        period = oracle_period(L, H, B)
        with pytest.raises(ContractError):
            contact_angle(period, L, H, B)
        with pytest.raises(ContractError):
            contact_angle(-1e-9, L, H, B)


class TestReverseForce:
    def test_zero_at_episode_start(self):
        assert reverse_force(0.0, make_patch()) == 0.0

    def test_closed_form_at_ramp_end(self):
        ramp = math.sqrt(L * L - H * H)
        expected = K / (L * L - H * H)
        assert reverse_force(ramp, make_patch()) == pytest.approx(expected, rel=1e-12)

    def test_one_interior_maximum_per_cycle(self):
        xs, oracle = oracle_force_curve(L, H, B, K)
        patch = make_patch()
        values = np.array([reverse_force(float(x), patch) for x in xs[::100]])
        assert count_interior_maxima(oracle) == 1
        assert count_interior_maxima(values) == 1
        # Sharp rise then gradual decrease: peak sits inside the deformation ramp.
        ramp = math.sqrt(L * L - H * H)
        assert xs[np.argmax(oracle)] < ramp

    def test_matches_independent_oracle_on_dense_grid(self):
        patch = make_patch()
        period = oracle_period(L, H, B)
        for x in np.linspace(0.0, 3.0 * period, 500):
            assert reverse_force(float(x), patch) == pytest.approx(
                oracle_force(float(x), L, H, B, K), rel=1e-12, abs=1e-15
            )

    def test_periodicity_over_random_draws(self, rng):
        worst = 0.0
        for _ in range(10_000):
            l = rng.uniform(0.02, 0.15)
            h = rng.uniform(0.1, 0.9) * l
            b = rng.uniform(0.005, 0.05)
            patch = FurPatch(
                extent=(1.0, 1.0), hair_length=l, hand_height=h, bundle_width=b, force_scale=K
            )
            period = cycle_period(l, h, b)
            x = rng.uniform(0.0, 5.0 * period)
            worst = max(worst, abs(reverse_force(x, patch) - reverse_force(x + period, patch)))
        assert worst < 1e-12

    def test_continuity_at_ramp_junction(self, rng):
        for _ in range(500):
            l = rng.uniform(0.02, 0.15)
            h = rng.uniform(0.1, 0.9) * l
            b = rng.uniform(0.005, 0.05)
            patch = FurPatch(
                extent=(1.0, 1.0), hair_length=l, hand_height=h, bundle_width=b, force_scale=K
            )
            ramp = math.sqrt(l * l - h * h)
            below = reverse_force(ramp * (1.0 - 1e-12), patch)
            at = reverse_force(ramp, patch)
            assert abs(below - at) / at < 1e-9

    def test_rubbing_phase_strictly_decreasing(self):
        patch = make_patch()
        ramp = math.sqrt(L * L - H * H)
        period = oracle_period(L, H, B)
        xs = np.linspace(ramp + 1e-9, period - 1e-9, 1000)
        values = [reverse_force(float(x), patch) for x in xs]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_zero_at_period_multiples(self):
        patch = make_patch()
        period = cycle_period(L, H, B)
        for n in range(4):
            assert reverse_force(n * period, patch) == pytest.approx(0.0, abs=1e-12)

    def test_negative_position_rejected(self):
        with pytest.raises(InputError):
            reverse_force(-0.01, make_patch())


class TestGrowthForce:
    def test_default_level(self):
        assert growth_force(FurPatch()) == 0.6

    def test_zero_base(self):
        assert growth_force(make_patch(base_intensity=0.0)) == 0.0

    def test_independent_of_position(self):
        patch = make_patch()
        assert growth_force(patch) == growth_force(patch)


class TestIntensityMap:
    def test_along_grain_is_base_intensity(self):
        patch = make_patch()
        for force in (0.0, 0.01, 123.0):
            assert intensity_map(force, patch, StrokeDirection.ALONG_GRAIN) == 0.6

    def test_peak_force_maps_to_peak_intensity(self):
        patch = make_patch()
        peak = reverse_force_peak(L, H, B, K)
        assert intensity_map(peak, patch, StrokeDirection.AGAINST_GRAIN) == pytest.approx(1.0)

    def test_half_peak_maps_to_half(self):
        patch = make_patch()
        peak = reverse_force_peak(L, H, B, K)
        assert intensity_map(peak / 2, patch, StrokeDirection.AGAINST_GRAIN) == pytest.approx(0.5)

    def test_saturates_at_one(self):
        patch = make_patch()
        peak = reverse_force_peak(L, H, B, K)
        assert intensity_map(peak * 3, patch, StrokeDirection.AGAINST_GRAIN) == 1.0

    def test_output_always_in_unit_interval(self, rng):
        patch = make_patch()
        for _ in range(1000):
            force = rng.uniform(0.0, 1.0)
            mode = StrokeDirection.ALONG_GRAIN if rng.random() < 0.5 else StrokeDirection.AGAINST_GRAIN
            assert 0.0 <= intensity_map(force, patch, mode) <= 1.0

    def test_hold_mode_rejected(self):
        with pytest.raises(InputError):
            intensity_map(0.1, make_patch(), StrokeDirection.HOLD)

    def test_peak_matches_oracle_scan(self):
        _, oracle = oracle_force_curve(L, H, B, K)
        assert reverse_force_peak(L, H, B, K) == pytest.approx(float(oracle.max()), rel=1e-9)


class TestFrequencySelect:
    def test_smooth_direction(self):
        assert select_frequency(StrokeDirection.ALONG_GRAIN) == 70.0

    def test_rough_direction(self):
        assert select_frequency(StrokeDirection.AGAINST_GRAIN) == 30.0

    def test_hold_without_history(self):
        assert select_frequency(StrokeDirection.HOLD) == 50.0

    def test_hold_keeps_previous(self):
        assert select_frequency(StrokeDirection.HOLD, previous=30.0) == 30.0

    def test_output_set(self):
        assert {GROWTH_FREQUENCY_HZ, REVERSE_FREQUENCY_HZ, NEUTRAL_FREQUENCY_HZ} == {70.0, 30.0, 50.0}


class TestTick:
    def make_hand(self, t, x, vx):
        return HandState(t, [x, 0.1, 0.01], [vx, 0.0, 0.0])

    def test_stationary_hand_repeats_previous_command(self):
        patch = make_patch()
        state = CycleState()
        cmd1, state = tick(self.make_hand(0.0, 0.5, -0.06), patch, state)
        cmd2, state = tick(self.make_hand(0.1, 0.494, -0.06), patch, state)
        cmd3, state = tick(self.make_hand(0.2, 0.494, 0.0), patch, state)
        assert cmd3.intensity == cmd2.intensity
        assert cmd3.frequency == cmd2.frequency
        assert cmd3.direction is cmd2.direction
        assert np.array_equal(cmd3.focal_center, cmd2.focal_center)

    def test_against_stroke_of_two_periods_has_two_maxima(self):
        patch = make_patch()
        period = cycle_period(L, H, B)
        speed = 0.06
        dt = 1.0 / 90.0
        steps = int(round(2 * period / (speed * dt)))
        state = CycleState()
        intensities = []
        positions = []
        for i in range(steps + 1):
            x = 0.55 - speed * i * dt
            cmd, state = tick(self.make_hand(i * dt, x, -speed), patch, state)
            intensities.append(cmd.intensity)
            positions.append(0.55 - x)
        assert count_interior_maxima(intensities) == 2
        # Oracle: direct evaluation of the closed form along the path.
        peak = reverse_force_peak(L, H, B, K)
        for pos, intensity in zip(positions, intensities):
            expected = min(1.0, oracle_force(pos, L, H, B, K) / peak)
            assert intensity == pytest.approx(expected, abs=1e-9)

    def test_along_stroke_is_constant(self):
        patch = make_patch()
        state = CycleState()
        for i in range(200):
            cmd, state = tick(self.make_hand(i / 90.0, 0.05 + 0.06 * i / 90.0, 0.06), patch, state)
            assert cmd.intensity == 0.6
            assert cmd.frequency == 70.0
            assert cmd.direction is StrokeDirection.ALONG_GRAIN

    def test_intensity_depends_on_position_not_speed(self):
        patch = make_patch()
        period = cycle_period(L, H, B)
        target = 0.3 * period

        def run(speed, steps):
            state = CycleState()
            cmd = None
            for i in range(steps + 1):
                x = 0.55 - target * i / steps
                cmd, state = tick(
                    HandState(i / 90.0, [x, 0.1, 0.01], [-speed, 0.0, 0.0]), patch, state
                )
            return cmd.intensity

        slow = run(0.0125, 400)
        fast = run(0.0375, 400)
        assert slow == pytest.approx(fast, rel=1e-12)

    def test_direction_flip_resets_cycle(self):
        patch = make_patch()
        state = CycleState()
        _, state = tick(self.make_hand(0.0, 0.5, -0.06), patch, state)
        _, state = tick(self.make_hand(0.1, 0.45, -0.06), patch, state)
        assert state.x > 0
        _, state = tick(self.make_hand(0.2, 0.46, 0.06), patch, state)
        assert state.x == 0.0
        assert state.direction is StrokeDirection.ALONG_GRAIN

    def test_entering_against_grain_resets_cycle(self):
        patch = make_patch()
        state = CycleState()
        _, state = tick(self.make_hand(0.0, 0.3, 0.06), patch, state)
        assert state.direction is StrokeDirection.ALONG_GRAIN
        cmd, state = tick(self.make_hand(0.1, 0.31, -0.06), patch, state)
        assert state.direction is StrokeDirection.AGAINST_GRAIN
        assert state.x == 0.0
        assert np.array_equal(state.episode_origin, [0.31, 0.1, 0.01])
        assert cmd.intensity == 0.0  # cycle begins at zero force

    def test_hold_with_no_history_emits_neutral(self):
        patch = make_patch()
        cmd, _ = tick(self.make_hand(0.0, 0.3, 0.0), patch, CycleState())
        assert cmd.frequency == 50.0
        assert cmd.intensity == patch.base_intensity
        assert cmd.direction is StrokeDirection.HOLD

    def test_time_regression_rejected(self):
        patch = make_patch()
        _, state = tick(self.make_hand(1.0, 0.3, -0.06), patch, CycleState())
        with pytest.raises(ContractError):
            tick(self.make_hand(0.5, 0.3, -0.06), patch, state)

    def test_cycle_phase_tracks_position(self):
        patch = make_patch()
        period = cycle_period(L, H, B)
        state = CycleState()
        phases = []
        for i in range(120):
            x = 0.55 - 0.001 * i
            cmd, state = tick(self.make_hand(i * 0.01, x, -0.1), patch, state)
            phases.append(cmd.cycle_phase)
            assert 0.0 <= cmd.cycle_phase < 1.0
        assert phases[-1] == pytest.approx((0.001 * 119) % period / period, abs=1e-12)


class TestPerformance:
    def test_cycle_period_runtime_under_one_millisecond(self):
        cycle_period(L, H, B)  # warm any caches
        start = time.perf_counter()
        cycle_period(L, H, B)
        elapsed = time.perf_counter() - start
        assert elapsed < 1e-3
