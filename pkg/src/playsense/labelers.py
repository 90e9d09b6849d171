"""Geometric event labelers over the ball sidecar.

Both labelers are pure functions of the play plus ball metadata. The model
never sees the ball; these labels exist only to supervise the downstream
probing tasks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .court import basket_position, beyond_arc, in_attacking_half, signed_side
from .generator import MissingSidecarError
from .play import BallSidecar, PlaySequence, STEP_RATE_HZ


@dataclass(frozen=True)
class PickParams:
    """Thresholds for the four screening-play conditions.

    The conditions themselves are qualitative; these numbers are artifact
    configuration, not ground truth.
    """

    v_stat: float = 2.0  # ft/s below which a player counts as stationary
    k_stat: int = 3  # consecutive steps of stillness required
    d_near: float = 6.0  # ft for "defender near both"
    flip_window: int = STEP_RATE_HZ  # steps (1 s) for the side switch


@dataclass(frozen=True)
class AssistParams:
    max_dribbles: int = 2
    max_steps_to_shot: int = 3 * STEP_RATE_HZ  # 3 s at 5 Hz


@dataclass(frozen=True)
class AssistChain:
    """One completed assist: pass release through the made shot."""

    pass_frame: int
    reception_frame: int
    shot_frame: int
    passer: int
    receiver: int


def player_speeds(positions: np.ndarray) -> np.ndarray:
    """Backward-difference speeds in ft/s; step 0 repeats step 1."""
    diffs = np.linalg.norm(np.diff(positions, axis=0), axis=2) * STEP_RATE_HZ
    if len(diffs) == 0:
        return np.zeros(positions.shape[:2])
    return np.concatenate([diffs[:1], diffs], axis=0)


def label_picks(
    seq: PlaySequence,
    ball_handler: np.ndarray | None = None,
    ball_position: np.ndarray | None = None,
    params: PickParams = PickParams(),
) -> np.ndarray:
    """Per-step binary pick labels.

    label[t] = 1 iff, at step t, (1) the ball handler is outside the arc in
    the attacking half, (2) some teammate has been stationary for k_stat
    steps, (3) some defender is within d_near ft of both, and (4) the handler
    crosses the teammate-to-basket line within flip_window steps after t.
    """
    if ball_handler is None or ball_position is None:
        if seq.ball is None:
            raise MissingSidecarError("pick labeling needs the ball sidecar")
        ball_handler = seq.ball.handler
        ball_position = seq.ball.position
    ball_handler = np.asarray(ball_handler)
    if ball_handler.shape != (seq.n_steps,):
        raise ValueError(f"ball_handler must be ({seq.n_steps},), got {ball_handler.shape}")

    basket = basket_position(seq.meta.get("attack", "left"))
    pos = seq.positions.astype(np.float64)
    speeds = player_speeds(pos)
    offense = seq.offense
    labels = np.zeros(seq.n_steps, dtype=np.uint8)

    for t in range(seq.n_steps):
        h = int(ball_handler[t])
        if h < 0:
            continue
        if not (beyond_arc(pos[t, h], basket) and in_attacking_half(pos[t, h], basket)):
            continue
        for mate in range(seq.n_players):
            if mate == h or offense[mate] != offense[h]:
                continue
            if not _stationary_at(speeds, mate, t, params):
                continue
            if not _defender_near_both(pos[t], offense, h, mate, params.d_near):
                continue
            if _side_flips(pos, h, mate, basket, t, params.flip_window):
                labels[t] = 1
                break
    return labels


def _stationary_at(speeds, player, t, params) -> bool:
    if t < params.k_stat:
        return False
    window = speeds[t - params.k_stat + 1 : t + 1, player]
    return bool((window < params.v_stat).all())


def _defender_near_both(frame_pos, offense, handler, mate, d_near) -> bool:
    for d in range(len(offense)):
        if offense[d] == offense[handler]:
            continue
        if (np.linalg.norm(frame_pos[d] - frame_pos[handler]) < d_near
                and np.linalg.norm(frame_pos[d] - frame_pos[mate]) < d_near):
            return True
    return False


def _side_flips(pos, handler, mate, basket, t, window) -> bool:
    # the line is anchored where the stationary teammate stands at step t
    anchor = pos[t, mate]
    side_now = signed_side(pos[t, handler], anchor, basket)
    if side_now == 0.0:
        return False
    for tau in range(t + 1, min(t + window + 1, pos.shape[0])):
        side_later = signed_side(pos[tau, handler], anchor, basket)
        if side_later != 0.0 and side_later != side_now:
            return True
    return False


def assist_chains(
    seq: PlaySequence,
    ball_events: BallSidecar | None = None,
    params: AssistParams = AssistParams(),
) -> list[AssistChain]:
    """Completed assists: pass, at most two dribbles, made shot within 3 s."""
    sidecar = ball_events if ball_events is not None else seq.ball
    if sidecar is None:
        raise MissingSidecarError("assist labeling needs the ball sidecar")
    chains = []
    for p in sidecar.passes:
        shot = None
        for s in sidecar.shots:
            if s.shooter == p.receiver and s.frame >= p.reception_frame:
                shot = s
                break
        if shot is None or not shot.made:
            continue
        if shot.frame - p.reception_frame > params.max_steps_to_shot:
            continue
        dribbles = sum(
            1 for d in sidecar.dribbles
            if d.player == p.receiver and p.reception_frame < d.frame < shot.frame
        )
        if dribbles > params.max_dribbles:
            continue
        chains.append(AssistChain(p.release_frame, p.reception_frame, shot.frame,
                                  p.passer, p.receiver))
    return chains


def label_assists(
    seq: PlaySequence,
    ball_events: BallSidecar | None = None,
    params: AssistParams = AssistParams(),
) -> np.ndarray:
    """Per-step binary labels marking the pass frame of each completed assist.

    The probing task anchors at the shot frame; use :func:`assist_chains` for
    the full pass-to-shot structure.
    """
    labels = np.zeros(seq.n_steps, dtype=np.uint8)
    for chain in assist_chains(seq, ball_events, params):
        labels[chain.pass_frame] = 1
    return labels
