"""Labeler tests backed by literal condition-by-condition oracles.

The oracles below re-implement the pick and assist definitions as plain
loops, independently of the vectorized/structured code under test, and the
two must agree exactly on scripted data.
"""

import numpy as np
import pytest

from playsense import (
    PlayScript,
    assist_chains,
    generate_play,
    label_assists,
    label_picks,
    sample_plays,
)
from playsense.court import basket_position
from playsense.generator import MissingSidecarError, sample_script
from playsense.labelers import AssistParams, PickParams


# ----------------------------------------------------------------------
# independent oracles
# ----------------------------------------------------------------------

def oracle_pick_labels(seq, params: PickParams) -> np.ndarray:
    """Four conditions checked literally on every step (left-basket plays)."""
    basket = basket_position(seq.meta.get("attack", "left"))
    pos = seq.positions.astype(np.float64)
    handler = seq.ball.handler
    n_steps, n_players = pos.shape[:2]
    labels = np.zeros(n_steps, dtype=np.uint8)

    def speed(t, i):
        if t == 0:
            t = 1
        return float(np.linalg.norm(pos[t, i] - pos[t - 1, i])) * 5.0

    def outside_arc_in_half(p):
        # NBA arc: 23.75 ft, 22 ft corner lines within 14 ft of the baseline
        if p[0] <= 14.0:
            three = abs(p[1] - 25.0) >= 22.0
        else:
            three = np.hypot(p[0] - basket[0], p[1] - basket[1]) >= 23.75
        return three and p[0] <= 47.0

    def side_of_line(point, anchor):
        d = basket - anchor
        r = point - anchor
        return np.sign(d[0] * r[1] - d[1] * r[0])

    for t in range(n_steps):
        h = int(handler[t])
        if h < 0 or not outside_arc_in_half(pos[t, h]):
            continue
        hit = False
        for mate in range(n_players):
            if mate == h or seq.offense[mate] != seq.offense[h]:
                continue
            stationary = t >= params.k_stat and all(
                speed(tau, mate) < params.v_stat
                for tau in range(t - params.k_stat + 1, t + 1)
            )
            if not stationary:
                continue
            near = any(
                seq.offense[d] != seq.offense[h]
                and np.linalg.norm(pos[t, d] - pos[t, h]) < params.d_near
                and np.linalg.norm(pos[t, d] - pos[t, mate]) < params.d_near
                for d in range(n_players)
            )
            if not near:
                continue
            anchor = pos[t, mate]
            s0 = side_of_line(pos[t, h], anchor)
            if s0 == 0:
                continue
            for tau in range(t + 1, min(t + 6, n_steps)):
                s1 = side_of_line(pos[tau, h], anchor)
                if s1 != 0 and s1 != s0:
                    hit = True
                    break
            if hit:
                break
        labels[t] = 1 if hit else 0
    return labels


def oracle_assist_pass_frames(seq, params: AssistParams) -> set[int]:
    """Three conditions: completed pass, <= 2 dribbles, made shot within 3 s."""
    out = set()
    for p in seq.ball.passes:
        shots = [s for s in seq.ball.shots
                 if s.shooter == p.receiver and s.frame >= p.reception_frame]
        if not shots:
            continue
        shot = min(shots, key=lambda s: s.frame)
        dribble_count = len([
            d for d in seq.ball.dribbles
            if d.player == p.receiver and p.reception_frame < d.frame < shot.frame
        ])
        if (shot.made and shot.frame - p.reception_frame <= params.max_steps_to_shot
                and dribble_count <= params.max_dribbles):
            out.add(p.release_frame)
    return out


# ----------------------------------------------------------------------
# oracle agreement on scripted data
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def scripted_mix(topology):
    return sample_plays(topology, n_plays=100, n_players=4, n_steps=50, seed=123)


def test_pick_labeler_matches_oracle_on_100_plays(scripted_mix):
    params = PickParams()
    for seq in scripted_mix:
        got = label_picks(seq, params=params)
        want = oracle_pick_labels(seq, params)
        np.testing.assert_array_equal(got, want)


def test_assist_labeler_matches_oracle_on_100_plays(scripted_mix):
    params = AssistParams()
    for seq in scripted_mix:
        got = set(np.flatnonzero(label_assists(seq, params=params)))
        want = oracle_assist_pass_frames(seq, params)
        assert got == want


def test_scripted_picks_fire_at_the_scripted_frame(topology):
    rng = np.random.default_rng(7)
    fired = 0
    for _ in range(10):
        script = sample_script("pick", 50, 4, rng)
        seq = generate_play(script, topology, 4, 50, seed=int(rng.integers(1 << 30)))
        labels = label_picks(seq)
        if labels[seq.meta["pick_frame"]]:
            fired += 1
    assert fired >= 8  # geometry noise may spoil the odd play


# ----------------------------------------------------------------------
# direct condition edge cases
# ----------------------------------------------------------------------

def test_all_stationary_play_has_no_picks(topology):
    script = PlayScript(kind="iso_shot", actors={"shooter": 0}, event_frame=20, margin=10)
    seq = generate_play(script, topology, 4, 32, seed=1)
    seq.positions[:] = seq.positions[0]  # freeze everyone: no side flip can occur
    assert label_picks(seq).sum() == 0


def test_handler_inside_paint_never_labels(topology):
    script = PlayScript(kind="pick", event_frame=20, margin=10)
    seq = generate_play(script, topology, 4, 40, seed=2)
    handler = seq.meta["handler"]
    seq.positions[:, handler, 0] = 8.0  # well inside the arc
    seq.positions[:, handler, 1] = 25.0
    assert label_picks(seq).sum() == 0


def test_missing_sidecar_raises(topology):
    script = PlayScript(kind="iso_shot", event_frame=20, margin=10)
    seq = generate_play(script, topology, 4, 32, seed=1)
    seq.ball = None
    with pytest.raises(MissingSidecarError):
        label_picks(seq)
    with pytest.raises(MissingSidecarError):
        label_assists(seq)


class TestAssistConditions:
    def make(self, topology, n_dribbles=0, made=True, rts=8, seed=5):
        script = PlayScript(kind="assist", actors={"passer": 0, "receiver": 1},
                            event_frame=15 + 2 + rts, pass_frame=15,
                            n_dribbles=n_dribbles, shot_made=made,
                            reception_to_shot=rts, margin=12)
        return generate_play(script, topology, 4, 50, seed=seed)

    def test_clean_assist_detected_and_anchored_at_shot(self, topology):
        seq = self.make(topology)
        chains = assist_chains(seq)
        assert len(chains) == 1
        assert chains[0].pass_frame == 15
        assert chains[0].shot_frame == seq.meta["anchor_frame"]
        assert label_assists(seq)[15] == 1

    def test_three_dribbles_disqualify(self, topology):
        seq = self.make(topology, n_dribbles=3)
        assert assist_chains(seq) == []
        assert label_assists(seq).sum() == 0

    def test_missed_shot_disqualifies(self, topology):
        seq = self.make(topology, made=False)
        assert assist_chains(seq) == []

    def test_slow_shot_disqualifies(self, topology):
        seq = self.make(topology, rts=16)
        assert assist_chains(seq) == []

    def test_two_dribbles_within_three_seconds_counts(self, topology):
        seq = self.make(topology, n_dribbles=2, rts=10)
        assert len(assist_chains(seq)) == 1
