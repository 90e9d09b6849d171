import numpy as np
import pytest

from playsense import PlayScript, build_topology, generate_play, sample_plays
from playsense.generator import PRECURSOR_STEPS, ScriptTimingError, sample_script
from playsense.play import UPSAMPLE, event_index


IDX_SHOT = event_index("shot_attempt")


class TestDeterminism:
    def test_same_script_same_seed_bit_identical(self, topology):
        script = PlayScript(kind="iso_shot", actors={"shooter": 0}, event_frame=18,
                            shot_type="layup", margin=10)
        a = generate_play(script, topology, 3, 30, seed=42)
        b = generate_play(script, topology, 3, 30, seed=42)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.joints30, b.joints30)
        assert np.array_equal(a.events, b.events)
        assert np.array_equal(a.ball.position, b.ball.position)

    def test_different_seed_differs(self, topology):
        script = PlayScript(kind="iso_shot", event_frame=18, margin=10)
        a = generate_play(script, topology, 3, 30, seed=1)
        b = generate_play(script, topology, 3, 30, seed=2)
        assert not np.array_equal(a.joints30, b.joints30)


class TestContracts:
    def test_scripted_shot_event_is_marked(self, iso_play):
        assert iso_play.events[20, 1, IDX_SHOT] == 1
        assert iso_play.events[:, :, IDX_SHOT].sum() == 1

    def test_positions_inside_court(self, small_plays):
        for seq in small_plays:
            assert (seq.positions[..., 0] >= 0).all()
            assert (seq.positions[..., 0] <= 94).all()
            assert (seq.positions[..., 1] >= 0).all()
            assert (seq.positions[..., 1] <= 50).all()

    def test_joint_track_six_times_longer(self, small_plays):
        for seq in small_plays:
            assert seq.joints30.shape[0] == UPSAMPLE * seq.positions.shape[0]

    def test_mid_hip_projection_matches_positions(self, small_plays, topology):
        root = topology.joint_index["mid_hip"]
        for seq in small_plays:
            hips = seq.joints30[::UPSAMPLE, :, root, :2]
            assert np.array_equal(hips, seq.positions)

    def test_exclusive_events_never_collide(self, small_plays):
        ex = [event_index(n) for n in ("shot_attempt", "pass", "steal")]
        for seq in small_plays:
            assert (seq.events[:, :, ex].sum(axis=2) <= 1).all()

    def test_validate_passes(self, small_plays, topology):
        for seq in small_plays:
            seq.validate(mid_hip_index=topology.joint_index["mid_hip"])


class TestIntentPrecursor:
    """The skeletal signal exists while the centroid carries none."""

    def shooter_play(self, topology):
        script = PlayScript(kind="iso_shot", actors={"shooter": 1}, event_frame=30,
                            shot_type="jumpshot", margin=12, noise_scale=0.02)
        return generate_play(script, topology, 4, 44, seed=9)

    def test_wrists_rise_above_shoulders_before_shot(self, topology):
        seq = self.shooter_play(topology)
        wrist = topology.joint_index["r_wrist"]
        shoulder = topology.joint_index["r_shoulder"]
        frame_at_shot = UPSAMPLE * 30
        clearance = (seq.joints30[frame_at_shot, 1, wrist, 2]
                     - seq.joints30[frame_at_shot, 1, shoulder, 2])
        assert clearance > 1.0
        early = UPSAMPLE * (30 - PRECURSOR_STEPS - 3)
        assert (seq.joints30[early, 1, wrist, 2]
                < seq.joints30[early, 1, shoulder, 2])

    def test_non_shooters_keep_wrists_down(self, topology):
        seq = self.shooter_play(topology)
        wrist = topology.joint_index["r_wrist"]
        shoulder = topology.joint_index["r_shoulder"]
        frame_at_shot = UPSAMPLE * 30
        for player in (0, 2, 3):
            assert (seq.joints30[frame_at_shot, player, wrist, 2]
                    < seq.joints30[frame_at_shot, player, shoulder, 2])

    def test_centroids_stationary_through_precursor(self, topology):
        seq = self.shooter_play(topology)
        window = seq.positions[30 - PRECURSOR_STEPS : 31]
        steps = np.linalg.norm(np.diff(window.astype(np.float64), axis=0), axis=2)
        assert steps.max() < 1e-6

    def test_precursor_ramps_monotonically(self, topology):
        seq = self.shooter_play(topology)
        wrist = topology.joint_index["r_wrist"]
        heights = seq.joints30[UPSAMPLE * 20 : UPSAMPLE * 30 : UPSAMPLE, 1, wrist, 2]
        diffs = np.diff(heights.astype(np.float64))
        assert (diffs > -0.05).all()
        assert heights[-1] - heights[0] > 1.5


class TestScriptErrors:
    def test_event_frame_outside_margin(self, topology):
        script = PlayScript(kind="iso_shot", event_frame=2, margin=10)
        with pytest.raises(ScriptTimingError):
            generate_play(script, topology, 2, 30, seed=0)

    def test_sequence_too_short_for_margin(self, topology):
        script = PlayScript(kind="iso_shot", event_frame=10, margin=10)
        with pytest.raises(ScriptTimingError):
            generate_play(script, topology, 2, 18, seed=0)

    def test_pick_needs_four_players(self, topology):
        script = PlayScript(kind="pick", event_frame=15, margin=10)
        with pytest.raises(ScriptTimingError):
            generate_play(script, topology, 2, 40, seed=0)


class TestSampling:
    def test_sampled_scripts_generate_cleanly(self, topology):
        rng = np.random.default_rng(0)
        for kind in ("iso_shot", "assist", "pick", "random_motion"):
            for _ in range(5):
                script = sample_script(kind, 50, 4, rng)
                seq = generate_play(script, topology, 4, 50, seed=int(rng.integers(1 << 30)))
                seq.validate(mid_hip_index=topology.joint_index["mid_hip"])

    def test_sample_plays_mixture_and_shapes(self, topology):
        plays = sample_plays(topology, 12, 4, 40, seed=5)
        assert len(plays) == 12
        kinds = {seq.meta["kind"] for seq in plays}
        assert len(kinds) >= 2
        assert all(seq.positions.shape == (40, 4, 2) for seq in plays)

    def test_small_rosters_fall_back_to_feasible_kinds(self, topology):
        plays = sample_plays(topology, 6, 2, 40, seed=5)
        assert {seq.meta["kind"] for seq in plays} <= {"iso_shot", "random_motion"}
