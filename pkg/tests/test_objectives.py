import math

import numpy as np
import pytest
import torch

from playsense.objectives import (
    BinGrid,
    WindowConfig,
    bin_center,
    bin_delta,
    bin_deltas,
    derive_event_windows,
    event_bce,
    total_loss,
    trajectory_nll,
)


class TestBinning:
    def test_zero_delta_center_cell(self):
        assert bin_delta((0.0, 0.0)) == 60

    def test_minimum_corner(self):
        assert bin_delta((-5.5, -5.5)) == 0

    def test_positive_overflow_clamps_to_edge(self):
        # x clamps into cell 10, y stays in cell 5
        assert bin_delta((9.0, 0.0)) == 115

    def test_grid_cardinality(self):
        assert BinGrid().n_bins == 121

    def test_total_on_extremes(self):
        for delta in [(1e9, -1e9), (-77.0, 77.0), (5.5, 5.5)]:
            assert 0 <= bin_delta(delta) < 121

    def test_rebinning_bin_center_is_identity(self):
        for index in range(121):
            assert bin_delta(bin_center(index)) == index

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(3)
        deltas = rng.uniform(-8, 8, (50, 2))
        vec = bin_deltas(deltas)
        for k in range(50):
            assert vec[k] == bin_delta(deltas[k])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            bin_delta((np.nan, 0.0))


class TestEventWindows:
    def cfg(self, past_steps, future_steps):
        return WindowConfig(delta_past_s=past_steps / 5, delta_future_s=future_steps / 5)

    def test_future_window_from_single_event(self):
        events = np.zeros((10, 1, 9), dtype=np.uint8)
        events[5, 0, 2] = 1
        out = derive_event_windows(events, self.cfg(2, 2))
        future = out[:, 0, 2, 2]
        assert list(np.flatnonzero(future)) == [3, 4]

    def test_past_window_from_single_event(self):
        events = np.zeros((10, 1, 9), dtype=np.uint8)
        events[5, 0, 2] = 1
        out = derive_event_windows(events, self.cfg(2, 2))
        past = out[:, 0, 2, 0]
        assert list(np.flatnonzero(past)) == [6, 7]

    def test_event_at_start_truncates_cleanly(self):
        # nothing precedes step 0, so its own past indicator stays 0;
        # steps 1..3 still see the event inside their past window
        events = np.zeros((10, 1, 9), dtype=np.uint8)
        events[0, 0, 3] = 1
        out = derive_event_windows(events, self.cfg(3, 3))
        assert out[0, 0, 3, 0] == 0
        assert list(np.flatnonzero(out[:, 0, 3, 0])) == [1, 2, 3]
        assert out[0, 0, 3, 2] == 0  # future window never sees its own step

    def test_current_region_is_the_raw_events(self):
        rng = np.random.default_rng(0)
        events = (rng.random((20, 3, 9)) < 0.1).astype(np.uint8)
        out = derive_event_windows(events, self.cfg(2, 2))
        assert np.array_equal(out[..., 1], events)

    @pytest.mark.parametrize("steps", [1, 2, 5])
    def test_matches_brute_force_on_random_sequences(self, steps):
        rng = np.random.default_rng(steps)
        cfg = self.cfg(steps, steps)
        for _ in range(40):
            t_total = int(rng.integers(4, 40))
            events = (rng.random((t_total, 2, 9)) < 0.08).astype(np.uint8)
            got = derive_event_windows(events, cfg)
            for t in range(t_total):
                for i in range(2):
                    for e in range(9):
                        past = events[max(0, t - steps) : t, i, e].max(initial=0)
                        fut = events[t + 1 : min(t_total, t + steps + 1), i, e].max(initial=0)
                        assert got[t, i, e, 0] == past
                        assert got[t, i, e, 1] == events[t, i, e]
                        assert got[t, i, e, 2] == fut

    def test_shift_property(self):
        cfg = self.cfg(3, 4)
        events = np.zeros((40, 1, 9), dtype=np.uint8)
        events[20, 0, 4] = 1
        base = derive_event_windows(events, cfg)
        shifted_events = np.zeros_like(events)
        shifted_events[23, 0, 4] = 1
        shifted = derive_event_windows(shifted_events, cfg)
        np.testing.assert_array_equal(base[10:30], shifted[13:33])


class TestTrajectoryNll:
    def test_uniform_rows_give_log_121(self):
        probs = torch.full((5, 121), 1.0 / 121, dtype=torch.float64)
        truth = torch.arange(5)
        assert abs(float(trajectory_nll(probs, truth)) - math.log(121)) < 1e-12

    def test_one_hot_correct_rows_give_zero(self):
        probs = torch.zeros((4, 121), dtype=torch.float64)
        truth = torch.tensor([3, 50, 60, 120])
        probs[torch.arange(4), truth] = 1.0
        assert float(trajectory_nll(probs, truth)) == 0.0

    def test_mixed_uniform_and_one_hot(self):
        probs = torch.zeros((2, 121), dtype=torch.float64)
        probs[0] = 1.0 / 121
        probs[1, 7] = 1.0
        truth = torch.tensor([0, 7])
        expect = math.log(121) / 2
        assert abs(float(trajectory_nll(probs, truth)) - expect) < 1e-12

    def test_zero_probability_clamped(self, caplog):
        probs = torch.zeros((1, 121), dtype=torch.float64)
        probs[0, 1] = 1.0
        truth = torch.tensor([0])
        value = float(trajectory_nll(probs, truth))
        assert value == pytest.approx(-math.log(1e-12))


class TestEventBce:
    def test_exact_predictions_near_zero(self):
        truth = torch.zeros((3, 2, 9, 3), dtype=torch.float64)
        truth[0, 0, 2, 1] = 1.0
        loss = float(event_bce(truth.clone(), truth))
        assert loss < 1e-9

    def test_half_probabilities_give_27_log2(self):
        pred = torch.full((4, 2, 9, 3), 0.5, dtype=torch.float64)
        truth = torch.zeros_like(pred)
        expect = 27 * math.log(2)
        assert abs(float(event_bce(pred, truth)) - expect) < 1e-9

    def test_single_wrong_half_term(self):
        t_total, n = 5, 2
        truth = torch.zeros((t_total, n, 9, 3), dtype=torch.float64)
        pred = truth.clone()
        pred[1, 1, 4, 2] = 0.5
        expect = math.log(2) / (t_total * n)
        assert abs(float(event_bce(pred, truth)) - expect) < 1e-6

    def test_float32_saturation_stays_finite(self):
        pred = torch.ones((2, 2, 9, 3), dtype=torch.float32)
        truth = torch.zeros_like(pred)
        assert torch.isfinite(event_bce(pred, truth))


class TestTotalLoss:
    def test_alpha_one_is_trajectory_only(self):
        assert total_loss(2.0, 4.0, 1.0) == 2.0

    def test_alpha_zero_is_events_only(self):
        assert total_loss(2.0, 4.0, 0.0) == 4.0

    def test_even_mix(self):
        assert total_loss(2.0, 4.0, 0.5) == 3.0

    def test_alpha_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            total_loss(1.0, 1.0, 1.5)

    def test_affine_in_each_argument(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a, b, c = rng.uniform(0, 5, 3)
            alpha = rng.uniform(0, 1)
            left = total_loss(a + c, b, alpha)
            assert left == pytest.approx(total_loss(a, b, alpha) + alpha * c)
            right = total_loss(a, b + c, alpha)
            assert right == pytest.approx(total_loss(a, b, alpha) + (1 - alpha) * c)
