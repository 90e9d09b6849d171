import numpy as np
import pytest

from playsense.court import (
    DegeneratePoseError,
    LEFT_BASKET,
    RIGHT_BASKET,
    beyond_arc,
    compute_shoulder_normal,
    in_attacking_half,
    shoulder_normal_track,
    signed_side,
)


def rotation(theta):
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


class TestShoulderNormal:
    def test_unit_x_shoulders(self):
        np.testing.assert_allclose(compute_shoulder_normal((0, 0), (1, 0)), (0.0, 1.0),
                                   atol=1e-12)

    def test_vertical_shoulders_normalized(self):
        np.testing.assert_allclose(compute_shoulder_normal((0, 0), (0, 2)), (-1.0, 0.0),
                                   atol=1e-12)

    def test_coincident_shoulders_raise(self):
        with pytest.raises(DegeneratePoseError):
            compute_shoulder_normal((1, 1), (1, 1))

    def test_unit_length_and_orthogonal(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            u_l, u_r = rng.normal(0, 20, 2), rng.normal(0, 20, 2)
            if np.linalg.norm(u_r - u_l) < 1e-4:
                continue
            n = compute_shoulder_normal(u_l, u_r)
            assert abs(np.linalg.norm(n) - 1.0) < 1e-9
            assert abs(n @ (u_r - u_l)) < 1e-9

    @pytest.mark.parametrize("theta", [np.pi / 2, np.pi, 0.7345])
    def test_rotation_equivariance(self, theta):
        rng = np.random.default_rng(1)
        rot = rotation(theta)
        for _ in range(50):
            center = rng.normal(0, 5, 2)
            u_l, u_r = rng.normal(0, 10, 2), rng.normal(0, 10, 2)
            if np.linalg.norm(u_r - u_l) < 1e-4:
                continue
            n = compute_shoulder_normal(u_l, u_r)
            rotated = compute_shoulder_normal(center + rot @ (u_l - center),
                                              center + rot @ (u_r - center))
            np.testing.assert_allclose(rotated, rot @ n, atol=1e-6)

    def test_translation_and_scale_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            u_l, u_r = rng.normal(0, 10, 2), rng.normal(0, 10, 2)
            if np.linalg.norm(u_r - u_l) < 1e-4:
                continue
            n = compute_shoulder_normal(u_l, u_r)
            shift = rng.normal(0, 30, 2)
            scale = rng.uniform(0.1, 7.0)
            moved = compute_shoulder_normal(scale * u_l + shift, scale * u_r + shift)
            np.testing.assert_allclose(moved, n, atol=1e-9)


class TestNormalTrack:
    def test_degenerate_frame_reuses_previous(self):
        frames = np.zeros((12, 1, 2, 3))
        frames[:, 0, 0, :2] = (0, 0)
        frames[:, 0, 1, :2] = (1, 0)
        frames[6, 0, 1, :2] = (0, 0)  # coincident at step 1
        track = shoulder_normal_track(frames, left_idx=0, right_idx=1)
        np.testing.assert_allclose(track[0, 0], (0, 1))
        np.testing.assert_allclose(track[1, 0], (0, 1))  # carried over

    def test_degenerate_start_falls_back_to_canonical(self):
        frames = np.zeros((6, 1, 2, 3))
        track = shoulder_normal_track(frames, left_idx=0, right_idx=1)
        np.testing.assert_allclose(track[0, 0], (0, 1))


class TestArcGeometry:
    def test_top_of_key_three(self):
        assert beyond_arc(LEFT_BASKET + np.array([24.0, 0.0]), LEFT_BASKET)

    def test_midrange_not_three(self):
        assert not beyond_arc(LEFT_BASKET + np.array([15.0, 0.0]), LEFT_BASKET)

    def test_corner_three_uses_straight_line(self):
        # deep corner: only 22.6 ft from the hoop but past the 22 ft corner line
        point = np.array([2.0, 2.5])
        assert np.linalg.norm(point - LEFT_BASKET) < 23.75
        assert beyond_arc(point, LEFT_BASKET)

    def test_corner_two(self):
        assert not beyond_arc(np.array([2.0, 10.0]), LEFT_BASKET)

    def test_attacking_half(self):
        assert in_attacking_half((20, 25), LEFT_BASKET)
        assert not in_attacking_half((60, 25), LEFT_BASKET)
        assert in_attacking_half((60, 25), RIGHT_BASKET)


def test_signed_side_flips_across_line():
    a, b = np.array([0.0, 0.0]), np.array([10.0, 0.0])
    assert signed_side((5, 3), a, b) == 1.0
    assert signed_side((5, -3), a, b) == -1.0
    assert signed_side((5, 0), a, b) == 0.0
