import numpy as np
import pytest

from furhaptics.core import (
    FurPatch,
    HandState,
    StrokeDirection,
    Trajectory,
    central_difference_velocities,
    classify_direction,
    hand_states,
    load_trajectory,
    save_trajectory,
)
from furhaptics.errors import InputError, TraceParseError, TrajectoryError

GRAIN = np.array([1.0, 0.0, 0.0])


class TestClassifyDirection:
    def test_along_grain(self):
        result = classify_direction(0.06 * GRAIN, GRAIN, eps=0.005)
        assert result.direction is StrokeDirection.ALONG_GRAIN
        assert not result.hold

    def test_against_grain(self):
        result = classify_direction(-0.06 * GRAIN, GRAIN, eps=0.005)
        assert result.direction is StrokeDirection.AGAINST_GRAIN
        assert not result.hold

    def test_stationary_retains_previous(self):
        result = classify_direction(
            np.zeros(3), GRAIN, prev=StrokeDirection.AGAINST_GRAIN
        )
        assert result.direction is StrokeDirection.AGAINST_GRAIN
        assert result.hold

    def test_stationary_without_history(self):
        result = classify_direction(np.zeros(3), GRAIN)
        assert result.direction is StrokeDirection.HOLD
        assert result.hold

    def test_non_finite_velocity_rejected(self):
        with pytest.raises(InputError):
            classify_direction([np.nan, 0.0, 0.0], GRAIN)

    def test_non_unit_grain_rejected(self):
        with pytest.raises(InputError):
            classify_direction([0.1, 0.0, 0.0], [2.0, 0.0, 0.0])

    def test_bad_eps_rejected(self):
        with pytest.raises(InputError):
            classify_direction([0.1, 0.0, 0.0], GRAIN, eps=0.0)

    def test_sign_never_flips_under_positive_scaling(self, rng):
        for _ in range(200):
            v = rng.normal(size=3) * 0.1
            base = classify_direction(v, GRAIN)
            for scale in (0.5, 2.0, 10.0, 1000.0):
                scaled = classify_direction(scale * v, GRAIN)
                moving = {StrokeDirection.ALONG_GRAIN, StrokeDirection.AGAINST_GRAIN}
                if base.direction in moving and scaled.direction in moving:
                    assert scaled.direction is base.direction

    def test_moving_classification_stable_when_scaled_up(self, rng):
        for _ in range(200):
            v = rng.normal(size=3) * 0.2
            base = classify_direction(v, GRAIN)
            if base.hold:
                continue
            for scale in (1.0, 1.5, 7.0, 100.0):
                assert classify_direction(scale * v, GRAIN).direction is base.direction

    def test_exact_threshold_is_a_hold(self):
        # Classification flips only when |v . grain| crosses eps, strictly.
        result = classify_direction([0.005, 0.0, 0.0], GRAIN, prev=StrokeDirection.AGAINST_GRAIN, eps=0.005)
        assert result.hold
        assert result.direction is StrokeDirection.AGAINST_GRAIN

    def test_no_chatter_on_perpendicular_motion(self):
        # Motion exactly across the grain never flips the held direction.
        prev = StrokeDirection.ALONG_GRAIN
        for _ in range(50):
            result = classify_direction([0.0, 0.3, 0.0], GRAIN, prev=prev)
            assert result.hold
            assert result.direction is StrokeDirection.ALONG_GRAIN
            prev = result.direction


class TestHandState:
    def test_basic_construction(self):
        hs = HandState(0.5, [0.1, 0.2, 0.3], [0.0, 0.0, 0.0])
        assert hs.position.shape == (3,)

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            HandState(0.0, [np.inf, 0, 0], [0, 0, 0])


class TestFurPatch:
    def test_grain_is_normalized(self):
        patch = FurPatch(grain=(2.0, 0.0, 0.0))
        assert np.linalg.norm(patch.grain) == pytest.approx(1.0, abs=1e-12)

    def test_hand_height_bounds(self):
        with pytest.raises(InputError):
            FurPatch(hand_height=0.05, hair_length=0.05)
        with pytest.raises(InputError):
            FurPatch(hand_height=0.0)

    def test_base_intensity_range(self):
        with pytest.raises(InputError):
            FurPatch(base_intensity=1.2)

    def test_contains(self):
        patch = FurPatch(origin=(0, 0, 0), grain=(1, 0, 0), extent=(0.25, 0.20))
        assert patch.contains([0.1, 0.1, 0.01])
        assert not patch.contains([0.3, 0.1, 0.01])
        assert not patch.contains([0.1, -0.01, 0.01])
        assert patch.contains([0.0, 0.0, 0.0])


class TestTrajectoryIO:
    def test_round_trip(self, tmp_path):
        traj = Trajectory(
            times=[0.0, 0.5, 1.0],
            positions=[[0, 0, 0], [0.03, 0, 0], [0.06, 0, 0]],
        )
        path = tmp_path / "traj.csv"
        save_trajectory(path, traj)
        loaded = load_trajectory(path)
        assert np.array_equal(loaded.times, traj.times)
        assert np.array_equal(loaded.positions, traj.positions)

    def test_velocity_columns_respected(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("t,x,y,z,vx,vy,vz\n0,0,0,0,0.5,0,0\n1,0.5,0,0,0.5,0,0\n")
        loaded = load_trajectory(path)
        assert loaded.velocities is not None
        assert loaded.velocities[0][0] == 0.5

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(TrajectoryError):
            load_trajectory(path)

    def test_header_only(self, tmp_path):
        path = tmp_path / "header.csv"
        path.write_text("t,x,y,z\n")
        with pytest.raises(TrajectoryError, match="empty trajectory"):
            load_trajectory(path)

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,x,y,z\n0,0,0,0\n1,oops,0,0\n")
        with pytest.raises(TraceParseError, match="line 3"):
            load_trajectory(path)

    def test_non_increasing_times_rejected(self):
        with pytest.raises(TrajectoryError):
            Trajectory(times=[0.0, 0.0], positions=[[0, 0, 0], [1, 0, 0]])

    def test_unknown_header(self, tmp_path):
        path = tmp_path / "weird.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(TraceParseError):
            load_trajectory(path)


class TestVelocityDerivation:
    def test_central_differences_match_hand_math(self):
        times = np.array([0.0, 1.0, 2.0, 3.0])
        positions = np.array([[0.0, 0, 0], [1.0, 0, 0], [4.0, 0, 0], [9.0, 0, 0]])
        v = central_difference_velocities(times, positions)
        assert v[0][0] == pytest.approx((1.0 - 0.0) / 1.0)
        assert v[1][0] == pytest.approx((4.0 - 0.0) / 2.0)
        assert v[2][0] == pytest.approx((9.0 - 1.0) / 2.0)
        assert v[3][0] == pytest.approx((9.0 - 4.0) / 1.0)

    def test_hand_states_derive_velocity(self):
        traj = Trajectory(times=[0.0, 1.0], positions=[[0, 0, 0], [0.1, 0, 0]])
        states = hand_states(traj)
        assert len(states) == 2
        assert states[0].velocity[0] == pytest.approx(0.1)

    def test_single_sample_velocity_is_zero(self):
        traj = Trajectory(times=[0.0], positions=[[0, 0, 0]])
        states = hand_states(traj)
        assert np.all(states[0].velocity == 0.0)
