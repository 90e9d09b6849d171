"""Seeded synthetic play generator.

The generator walks a kinematic rig through scripted scenarios so that every
scripted event is preceded by a pose precursor (raised wrists, a crouch, a
widened screening stance) while the planar centroids stay still during the
precursor window. That construction makes "the skeleton knows before the
position does" a controlled property of the data rather than an empirical
claim: a position-only observer sees statistically identical centroids for
all candidate actors right up to the event.

Everything is driven by one ``numpy`` generator seeded per play, so equal
(script, seed) pairs produce bit-identical output.
"""

from __future__ import annotations

import math

import numpy as np

from .court import basket_position, beyond_arc, clamp_to_court
from .play import (
    BallSidecar,
    DribbleEvent,
    N_EVENTS,
    PassEvent,
    PlayScript,
    PlaySequence,
    ShotEvent,
    UPSAMPLE,
    event_index,
)
from .topology import SkeletonTopology

# 5 Hz step counts.
PRECURSOR_STEPS = 10  # shot precursor ramps over the 2 s before release
SETTLE_LEAD = 2  # extra still steps before the precursor begins
PASS_FLIGHT_STEPS = 2
PASS_PREP_STEPS = 6
CATCH_PREP_STEPS = 4
RELEASE_DECAY_FRAMES = 12  # 30 Hz frames to relax the pose after release
SCREEN_LEAD = 8

COURT_MARGIN = 1.0

IDX_SHOT = event_index("shot_attempt")
IDX_PASS = event_index("pass")
IDX_DRIBBLE = event_index("dribble")
IDX_NO_ACTION = event_index("no_action")

# Rest pose in a player-local frame: (lateral-left, forward, height) in feet.
BASE_POSE = {
    "mid_hip": (0.0, 0.0, 3.2),
    "neck": (0.0, 0.0, 4.85),
    "head": (0.0, 0.1, 5.65),
    "l_shoulder": (0.8, 0.0, 4.65),
    "r_shoulder": (-0.8, 0.0, 4.65),
    "l_elbow": (1.0, 0.15, 3.75),
    "r_elbow": (-1.0, 0.15, 3.75),
    "l_wrist": (1.05, 0.3, 2.95),
    "r_wrist": (-1.05, 0.3, 2.95),
    "l_hip": (0.45, 0.0, 3.05),
    "r_hip": (-0.45, 0.0, 3.05),
    "l_knee": (0.5, 0.15, 1.75),
    "r_knee": (-0.5, 0.15, 1.75),
    "l_ankle": (0.55, 0.1, 0.35),
    "r_ankle": (-0.55, 0.1, 0.35),
    "l_foot": (0.55, 0.55, 0.1),
    "r_foot": (-0.55, 0.55, 0.1),
}

_TORSO = ("mid_hip", "neck", "head", "l_shoulder", "r_shoulder", "l_hip", "r_hip")
_SWING_LEFT = ("l_elbow", "l_wrist", "l_knee", "l_ankle", "l_foot")
_SWING_RIGHT = ("r_elbow", "r_wrist", "r_knee", "r_ankle", "r_foot")

# Shot-type pose signatures applied at full ramp, keyed by (joint, axis)
# with axis 0=lateral, 1=forward, 2=height. All rigs shoot right-handed.
_SHOT_SIGNATURES = {
    "jumpshot": {
        ("l_wrist", 2): 2.3, ("r_wrist", 2): 2.3,
        ("l_wrist", 1): 0.4, ("r_wrist", 1): 0.4,
        ("l_elbow", 2): 1.2, ("r_elbow", 2): 1.2,
    },
    "dunk": {
        ("l_wrist", 2): 3.2, ("r_wrist", 2): 3.2,
        ("l_wrist", 1): 0.7, ("r_wrist", 1): 0.7,
        ("l_elbow", 2): 1.8, ("r_elbow", 2): 1.8,
    },
    "hook": {
        ("r_wrist", 2): 2.7, ("r_wrist", 0): -1.1,
        ("r_elbow", 2): 1.4, ("r_elbow", 0): -0.6,
        ("l_wrist", 2): 0.3,
    },
    "layup": {
        ("r_wrist", 2): 2.1, ("r_wrist", 1): 0.5,
        ("r_elbow", 2): 1.0,
        ("l_knee", 2): 1.3, ("l_ankle", 2): 1.0, ("l_foot", 2): 1.0,
    },
}

_SHOT_CROUCH = {"jumpshot": 0.45, "dunk": 0.8, "hook": 0.2, "layup": 0.15}


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _ease(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 - np.cos(np.pi * np.clip(x, 0.0, 1.0)))


class ScriptTimingError(ValueError):
    """Scripted frames do not fit inside the sequence."""


class MissingSidecarError(ValueError):
    """A labeler was called without the ball sidecar it needs."""


def generate_play(
    script: PlayScript,
    topology: SkeletonTopology,
    n_players: int,
    n_steps: int,
    seed: int,
) -> PlaySequence:
    """Synthesize one play for the given script.

    Deterministic in (script, seed). The returned sequence carries the ball
    sidecar and a metadata dict with the anchor frame and shot bookkeeping
    used by the downstream tasks.
    """
    if n_players < 2:
        raise ValueError("need at least 2 players")
    if n_steps < 2 * script.margin:
        raise ScriptTimingError(
            f"n_steps={n_steps} too short for script margin {script.margin}"
        )
    try:
        script.validate(n_players, n_steps)
    except ValueError as exc:
        raise ScriptTimingError(str(exc)) from exc

    rng = np.random.default_rng(seed)
    offense = np.zeros(n_players, dtype=bool)
    offense[: (n_players + 1) // 2] = True
    basket = basket_position(script.attack)

    builder = {
        "iso_shot": _build_iso_shot,
        "assist": _build_assist,
        "pick": _build_pick,
        "random_motion": _build_random_motion,
    }[script.kind]
    world = builder(script, rng, n_players, n_steps, offense, basket)

    pos5 = clamp_to_court(world.pos5, margin=COURT_MARGIN)
    pos30, theta30, speed30 = _upsample(pos5, world.theta5)
    joints30 = _render_skeletons(
        pos30, theta30, speed30, world.deltas30, rng, script.noise_scale, topology
    )

    events = world.events
    events[:, :, IDX_NO_ACTION] = (events.sum(axis=2) == 0).astype(np.uint8)

    meta = dict(world.meta)
    meta.update(kind=script.kind, attack=script.attack, seed=seed)
    if world.shot is not None:
        loc = pos5[world.shot.frame, world.shot.shooter]
        shot = ShotEvent(
            frame=world.shot.frame,
            shooter=world.shot.shooter,
            made=world.shot.made,
            shot_type=world.shot.shot_type,
            location=(float(loc[0]), float(loc[1])),
            three_point=beyond_arc(loc, basket),
        )
        world.sidecar.shots.append(shot)
        meta.update(
            shot_frame=shot.frame,
            shooter=shot.shooter,
            shot_type=shot.shot_type,
            shot_made=shot.made,
            three_point=shot.three_point,
        )

    sidecar = world.sidecar
    sidecar.position = clamp_to_court(sidecar.position).astype(np.float32)

    # identity embeddings get a fresh id assignment per play, so ids carry
    # no role information a probe could exploit in place of the skeleton
    player_ids = rng.permutation(n_players).astype(np.int32)

    seq = PlaySequence(
        positions=pos5.astype(np.float32),
        joints30=joints30.astype(np.float32),
        events=events,
        seed=seed,
        player_ids=player_ids,
        offense=offense,
        meta=meta,
        ball=sidecar,
    )
    seq.validate(mid_hip_index=topology.joint_index[topology.root])
    return seq


class _World:
    """Mutable scratch state produced by the per-kind builders."""

    def __init__(self, n_steps, n_players, n_joints):
        self.pos5 = np.zeros((n_steps, n_players, 2))
        self.theta5 = np.zeros((n_steps, n_players))
        self.events = np.zeros((n_steps, n_players, N_EVENTS), dtype=np.uint8)
        self.deltas30 = np.zeros((UPSAMPLE * n_steps, n_players, n_joints, 3))
        self.sidecar = BallSidecar(
            position=np.zeros((n_steps, 2), dtype=np.float32),
            handler=np.full(n_steps, -1, dtype=np.int32),
        )
        self.meta: dict = {}
        self.shot: ShotEvent | None = None


class _PendingShot:
    def __init__(self, frame, shooter, made, shot_type):
        self.frame = frame
        self.shooter = shooter
        self.made = made
        self.shot_type = shot_type


def _build_iso_shot(script, rng, n_players, n_steps, offense, basket):
    world = _World(n_steps, n_players, len(BASE_POSE))
    t_shot = script.event_frame
    offense_idx = np.flatnonzero(offense)
    shooter = script.actors.get("shooter", int(rng.choice(offense_idx)))

    spots = _sample_common_spots(rng, n_players, basket)
    if script.shot_type is not None:
        # explicit scripts pin the mechanics; randomized datasets derive the
        # type from the sampled spot so position stays uninformative
        shot_type = script.shot_type
        spots[shooter] = _shot_spot(rng, basket, shot_type, script.three_point)
    else:
        shot_type = _shot_type_for_radius(rng, float(np.linalg.norm(spots[shooter] - basket)))

    settle = t_shot - PRECURSOR_STEPS - SETTLE_LEAD
    for i in range(n_players):
        _drift_to_spot(world.pos5, i, spots[i], settle, rng)
    _face_targets(world, offense, basket, spots)

    world.events[t_shot, shooter, IDX_SHOT] = 1
    _dribble_series(world, shooter, start=2, stop=settle, every=4)
    _ball_with_handler(world, shooter, 0, t_shot, basket)
    _apply_shot_precursor(world.deltas30, shooter, t_shot, shot_type, script.shot_made, rng)

    world.shot = _PendingShot(t_shot, shooter, script.shot_made, shot_type)
    world.meta["anchor_frame"] = t_shot
    return world


def _build_assist(script, rng, n_players, n_steps, offense, basket):
    world = _World(n_steps, n_players, len(BASE_POSE))
    offense_idx = np.flatnonzero(offense)
    passer = script.actors.get("passer", int(offense_idx[0]))
    receiver = script.actors.get("receiver", int(offense_idx[1]))
    t_pass = script.pass_frame if script.pass_frame is not None else script.event_frame - 10
    t_recv = t_pass + PASS_FLIGHT_STEPS
    rts = script.reception_to_shot if script.reception_to_shot is not None else 8
    t_shot = t_recv + rts
    if t_shot > n_steps - script.margin:
        raise ScriptTimingError(f"assist shot frame {t_shot} runs past the margin")

    spots = _sample_common_spots(rng, n_players, basket)
    for _ in range(20):
        if np.linalg.norm(spots[receiver] - spots[passer]) >= 8.0:
            break
        spots = _sample_common_spots(rng, n_players, basket)
    if script.shot_type is not None:
        shot_type = script.shot_type
        spots[receiver] = _shot_spot(rng, basket, shot_type, script.three_point)
    else:
        shot_type = _shot_type_for_radius(rng, float(np.linalg.norm(spots[receiver] - basket)))

    settle = t_pass - PASS_PREP_STEPS
    for i in range(n_players):
        _drift_to_spot(world.pos5, i, spots[i], settle, rng)
    _face_targets(world, offense, basket, spots)
    # passer squares to the receiver before the pass
    world.theta5[settle:, passer] = _angle_to(spots[passer], spots[receiver])

    world.events[t_pass, passer, IDX_PASS] = 1
    world.events[t_shot, receiver, IDX_SHOT] = 1
    world.sidecar.passes.append(PassEvent(t_pass, t_recv, passer, receiver))

    dribble_frames = [t_recv + 2 + 2 * k for k in range(script.n_dribbles)]
    for f in dribble_frames:
        if f < t_shot:
            world.events[f, receiver, IDX_DRIBBLE] = 1
            world.sidecar.dribbles.append(DribbleEvent(f, receiver))
            _apply_dribble_bounce(world.deltas30, receiver, f)

    _ball_with_handler(world, passer, 0, t_pass, basket, release=False)
    _ball_flight(world, t_pass, t_recv, world.pos5[t_pass, passer], world.pos5[t_recv, receiver])
    _ball_with_handler(world, receiver, t_recv, t_shot, basket)

    _apply_pass_prep(world.deltas30, passer, t_pass)
    _apply_catch_prep(world.deltas30, receiver, t_recv)
    _apply_shot_precursor(world.deltas30, receiver, t_shot, shot_type, script.shot_made, rng)

    world.shot = _PendingShot(t_shot, receiver, script.shot_made, shot_type)
    world.meta.update(anchor_frame=t_shot, pass_frame=t_pass, reception_frame=t_recv,
                      passer=passer, receiver=receiver, n_dribbles=script.n_dribbles)
    return world


def _build_pick(script, rng, n_players, n_steps, offense, basket):
    world = _World(n_steps, n_players, len(BASE_POSE))
    t_pick = script.event_frame
    offense_idx = np.flatnonzero(offense)
    defense_idx = np.flatnonzero(~offense)
    handler = script.actors.get("handler", int(offense_idx[0]))
    screener = script.actors.get("screener", int(offense_idx[1]))
    guard = script.actors.get("defender", int(defense_idx[0]))

    spots = _sample_common_spots(rng, n_players, basket)
    ang = rng.uniform(-0.4, 0.4)
    radius = rng.uniform(25.5, 27.0)
    spots[handler] = basket + radius * np.array([math.cos(ang), math.sin(ang)])
    lateral = np.array([-math.sin(ang), math.cos(ang)])
    side = rng.choice((-1.0, 1.0))
    spots[screener] = spots[handler] + 6.0 * side * lateral
    spots[guard] = 0.5 * (spots[handler] + spots[screener])
    spots[guard] += 1.0 * _unit(basket - spots[guard])
    for d in defense_idx:
        if d != guard:
            spots[d] = spots[d] + _unit(basket - spots[d]) * 2.0

    settle = t_pick - SCREEN_LEAD
    for i in range(n_players):
        _drift_to_spot(world.pos5, i, spots[i], settle, rng)
    _face_targets(world, offense, basket, spots)

    # handler cuts to the mirror point across the screener-to-basket line,
    # flipping sides within 3 steps of the pick frame
    target = _mirror_across_line(spots[handler], spots[screener], basket)
    target += 2.0 * _unit(basket - target)
    for k, t in enumerate(range(t_pick, min(t_pick + 4, n_steps))):
        frac = _ease(np.array(k / 3.0))
        world.pos5[t, handler] = (1 - frac) * spots[handler] + frac * target
    if t_pick + 4 < n_steps:
        world.pos5[t_pick + 4 :, handler] = target

    # torso telegraphs the cut over the second before it happens
    theta_cut = _angle_to(spots[handler], target)
    theta_face = _angle_to(spots[handler], basket)
    for k, t in enumerate(range(t_pick - 5, t_pick)):
        frac = (k + 1) / 5.0
        world.theta5[t, handler] = theta_face + frac * _wrap_angle(theta_cut - theta_face)
    world.theta5[t_pick:, handler] = theta_cut

    _dribble_series(world, handler, start=2, stop=min(t_pick + 4, n_steps - 1), every=3)
    _ball_with_handler(world, handler, 0, n_steps - 1, basket, release=False)
    world.sidecar.handler[:] = handler
    for t in range(n_steps):
        world.sidecar.position[t] = world.pos5[t, handler]

    _apply_screen_stance(world.deltas30, screener, settle, min(t_pick + 5, n_steps - 1))

    world.meta.update(anchor_frame=t_pick, pick_frame=t_pick, handler=handler,
                      screener=screener, defender=guard)
    return world


def _build_random_motion(script, rng, n_players, n_steps, offense, basket):
    world = _World(n_steps, n_players, len(BASE_POSE))
    pos = _sample_common_spots(rng, n_players, basket)
    vel = rng.normal(0.0, 0.8, (n_players, 2))
    for t in range(n_steps):
        world.pos5[t] = pos
        vel = 0.85 * vel + rng.normal(0.0, 0.35, (n_players, 2))
        pos = pos + vel
        pos[:, 0] = np.clip(pos[:, 0], COURT_MARGIN, 94.0 - COURT_MARGIN)
        pos[:, 1] = np.clip(pos[:, 1], COURT_MARGIN, 50.0 - COURT_MARGIN)
    for i in range(n_players):
        d = np.diff(world.pos5[:, i], axis=0)
        theta = np.arctan2(d[:, 1], d[:, 0])
        world.theta5[:-1, i] = theta
        world.theta5[-1, i] = theta[-1] if len(theta) else 0.0

    handler = 0
    _dribble_series(world, handler, start=1, stop=n_steps - 1, every=3)
    world.sidecar.handler[:] = handler
    for t in range(n_steps):
        world.sidecar.position[t] = world.pos5[t, handler]
    world.meta["anchor_frame"] = n_steps // 2
    return world


# ----------------------------------------------------------------------
# placement, paths and the ball
# ----------------------------------------------------------------------

def _unit(v):
    n = np.linalg.norm(v)
    return v / n if n > 1e-9 else np.array([1.0, 0.0])


def _angle_to(src, dst) -> float:
    d = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    return float(math.atan2(d[1], d[0]))


def _wrap_angle(a: float) -> float:
    return float((a + math.pi) % (2 * math.pi) - math.pi)


def _mirror_across_line(point, line_from, line_to):
    d = _unit(np.asarray(line_to, dtype=float) - np.asarray(line_from, dtype=float))
    r = np.asarray(point, dtype=float) - line_from
    return line_from + 2.0 * (r @ d) * d - r


def _shot_spot(rng, basket, shot_type, three_point):
    if three_point:
        radius = rng.uniform(24.5, 26.5)
    else:
        lo, hi = {"dunk": (2.0, 4.0), "layup": (3.0, 6.0),
                  "hook": (6.0, 11.0), "jumpshot": (10.0, 20.0)}[shot_type]
        radius = rng.uniform(lo, hi)
    ang = rng.uniform(-0.85, 0.85)
    return basket + radius * np.array([math.cos(ang), math.sin(ang)])


def _shot_type_for_radius(rng, radius: float) -> str:
    if radius < 6.0:
        return str(rng.choice(("dunk", "layup")))
    if radius < 12.0:
        return str(rng.choice(("hook", "jumpshot")))
    return "jumpshot"


def _sample_common_spots(rng, n_players, basket, min_separation=4.0):
    """Every player draws from one spot distribution, whatever their role.

    Identical marginals are what keeps the planted shot signal out of the
    centroids: given the spots alone, each candidate is equally plausible.
    The radius mixture puts a clear mass on both sides of the arc.
    """
    spots = np.zeros((n_players, 2))
    for i in range(n_players):
        for _ in range(20):
            if rng.random() < 0.3:
                radius = rng.uniform(24.2, 26.5)
            else:
                radius = rng.uniform(2.5, 22.0)
            ang = rng.uniform(-0.85, 0.85)
            spot = basket + radius * np.array([math.cos(ang), math.sin(ang)])
            if i == 0 or np.linalg.norm(spots[:i] - spot, axis=1).min() >= min_separation:
                break
        spots[i] = spot
    return spots


def _drift_to_spot(pos5, player, spot, settle, rng):
    """Ease from a nearby start point onto the spot, then hold exactly still."""
    n_steps = pos5.shape[0]
    settle = int(np.clip(settle, 1, n_steps - 1))
    offset = rng.uniform(2.0, 5.0) * _unit(rng.normal(0.0, 1.0, 2))
    start = spot + offset
    for t in range(settle):
        frac = _ease(np.array(t / max(settle - 1, 1)))
        pos5[t, player] = (1 - frac) * start + frac * spot
    pos5[settle:, player] = spot


def _face_targets(world, offense, basket, spots):
    n_steps, n_players = world.theta5.shape
    offense_idx = np.flatnonzero(offense)
    for i in range(n_players):
        if offense[i]:
            target = basket
        else:
            mark = offense_idx[list(np.flatnonzero(~offense)).index(i) % len(offense_idx)]
            target = spots[mark]
        for t in range(n_steps):
            world.theta5[t, i] = _angle_to(world.pos5[t, i], target)


def _dribble_series(world, player, start, stop, every):
    for f in range(start, stop, every):
        if world.events[f, player, IDX_SHOT] or world.events[f, player, IDX_PASS]:
            continue
        world.events[f, player, IDX_DRIBBLE] = 1
        world.sidecar.dribbles.append(DribbleEvent(f, player))
        _apply_dribble_bounce(world.deltas30, player, f)


def _ball_with_handler(world, handler, start, stop, basket, release=True):
    """Ball rides with the handler on [start, stop]; optionally flies to the rim after."""
    n_steps = world.sidecar.handler.shape[0]
    stop = min(stop, n_steps - 1)
    for t in range(start, stop + 1):
        world.sidecar.handler[t] = handler
        world.sidecar.position[t] = world.pos5[t, handler]
    if release and stop + 1 < n_steps:
        launch = world.pos5[stop, handler]
        for k, t in enumerate(range(stop + 1, min(stop + 4, n_steps))):
            frac = (k + 1) / 3.0
            world.sidecar.handler[t] = -1
            world.sidecar.position[t] = (1 - frac) * launch + frac * basket
        for t in range(min(stop + 4, n_steps), n_steps):
            world.sidecar.handler[t] = -1
            world.sidecar.position[t] = basket


def _ball_flight(world, t_from, t_to, src, dst):
    for k, t in enumerate(range(t_from + 1, t_to)):
        frac = (k + 1) / max(t_to - t_from, 1)
        world.sidecar.handler[t] = -1
        world.sidecar.position[t] = (1 - frac) * src + frac * dst


# ----------------------------------------------------------------------
# pose overlays (local-frame joint offsets at 30 Hz)
# ----------------------------------------------------------------------

_JOINT_AT = {name: k for k, name in enumerate(BASE_POSE)}


def _apply_shot_precursor(deltas30, player, t_shot, shot_type, made, rng):
    """Ramp the shot signature over the 2 s before release, then relax.

    Missed shots get a shaky release: high-frequency wrist jitter over the
    final 40% of the ramp, the one pre-release cue of the outcome.
    """
    n_frames = deltas30.shape[0]
    f_shot = UPSAMPLE * t_shot
    f_start = max(0, f_shot - UPSAMPLE * PRECURSOR_STEPS)
    span = max(f_shot - f_start, 1)
    frames = np.arange(f_start, min(f_shot + 1, n_frames))
    ramp = _smoothstep((frames - f_start) / span)

    for (joint, axis), amount in _SHOT_SIGNATURES[shot_type].items():
        deltas30[frames, player, _JOINT_AT[joint], axis] += amount * ramp
    crouch = _SHOT_CROUCH[shot_type]
    for joint in _TORSO:
        deltas30[frames, player, _JOINT_AT[joint], 2] -= crouch * ramp

    jitter_scale = 0.02 if made else 0.2
    late = frames[ramp > 0.6]
    for joint in ("l_wrist", "r_wrist"):
        deltas30[late, player, _JOINT_AT[joint], 2] += rng.normal(0.0, jitter_scale, late.shape)

    decay_frames = np.arange(f_shot + 1, min(f_shot + 1 + RELEASE_DECAY_FRAMES, n_frames))
    if len(decay_frames):
        fall = 1.0 - _smoothstep((decay_frames - f_shot) / RELEASE_DECAY_FRAMES)
        for (joint, axis), amount in _SHOT_SIGNATURES[shot_type].items():
            deltas30[decay_frames, player, _JOINT_AT[joint], axis] += amount * fall
        for joint in _TORSO:
            deltas30[decay_frames, player, _JOINT_AT[joint], 2] -= crouch * fall


def _apply_pass_prep(deltas30, player, t_pass):
    f_pass = UPSAMPLE * t_pass
    f_start = max(0, f_pass - UPSAMPLE * PASS_PREP_STEPS)
    frames = np.arange(f_start, min(f_pass + 1, deltas30.shape[0]))
    ramp = _smoothstep((frames - f_start) / max(f_pass - f_start, 1))
    for joint in ("l_wrist", "r_wrist"):
        deltas30[frames, player, _JOINT_AT[joint], 1] += 0.8 * ramp
        deltas30[frames, player, _JOINT_AT[joint], 2] += 0.6 * ramp
    decay = np.arange(f_pass + 1, min(f_pass + 1 + RELEASE_DECAY_FRAMES, deltas30.shape[0]))
    if len(decay):
        fall = 1.0 - _smoothstep((decay - f_pass) / RELEASE_DECAY_FRAMES)
        for joint in ("l_wrist", "r_wrist"):
            deltas30[decay, player, _JOINT_AT[joint], 1] += 0.8 * fall
            deltas30[decay, player, _JOINT_AT[joint], 2] += 0.6 * fall


def _apply_catch_prep(deltas30, player, t_recv):
    f_recv = UPSAMPLE * t_recv
    f_start = max(0, f_recv - UPSAMPLE * CATCH_PREP_STEPS)
    frames = np.arange(f_start, min(f_recv + 1, deltas30.shape[0]))
    ramp = _smoothstep((frames - f_start) / max(f_recv - f_start, 1))
    for joint in ("l_wrist", "r_wrist"):
        deltas30[frames, player, _JOINT_AT[joint], 1] += 0.6 * ramp
        deltas30[frames, player, _JOINT_AT[joint], 2] += 0.8 * ramp


def _apply_screen_stance(deltas30, player, t_from, t_to):
    f0, f1 = UPSAMPLE * t_from, min(UPSAMPLE * t_to, deltas30.shape[0] - 1)
    frames = np.arange(max(f0, 0), f1 + 1)
    ramp = _smoothstep((frames - f0) / (4.0 * UPSAMPLE))
    stance = {
        ("l_ankle", 0): 0.35, ("r_ankle", 0): -0.35,
        ("l_foot", 0): 0.35, ("r_foot", 0): -0.35,
        ("l_knee", 0): 0.3, ("r_knee", 0): -0.3,
        ("l_knee", 2): -0.25, ("r_knee", 2): -0.25,
        ("l_wrist", 0): -0.6, ("r_wrist", 0): 0.6,
        ("l_wrist", 1): 0.6, ("r_wrist", 1): 0.6,
    }
    for (joint, axis), amount in stance.items():
        deltas30[frames, player, _JOINT_AT[joint], axis] += amount * ramp


def _apply_dribble_bounce(deltas30, player, frame):
    center = UPSAMPLE * frame
    frames = np.arange(max(center - 3, 0), min(center + 4, deltas30.shape[0]))
    dip = 0.55 * np.cos((frames - center) / 3.0 * (math.pi / 2))
    deltas30[frames, player, _JOINT_AT["r_wrist"], 2] -= dip


# ----------------------------------------------------------------------
# upsampling and rendering
# ----------------------------------------------------------------------

def _upsample(pos5, theta5):
    """Expand 5 Hz tracks to 30 Hz; frame 6t reproduces step t exactly."""
    n_steps, n_players = pos5.shape[:2]
    frames = UPSAMPLE * n_steps
    nxt = np.concatenate([pos5[1:], pos5[-1:]], axis=0)
    pos30 = np.zeros((frames, n_players, 2))
    for k in range(UPSAMPLE):
        frac = k / UPSAMPLE
        pos30[k::UPSAMPLE] = (1 - frac) * pos5 + frac * nxt

    unwrapped = np.unwrap(theta5, axis=0)
    nxt_th = np.concatenate([unwrapped[1:], unwrapped[-1:]], axis=0)
    theta30 = np.zeros((frames, n_players))
    for k in range(UPSAMPLE):
        frac = k / UPSAMPLE
        theta30[k::UPSAMPLE] = (1 - frac) * unwrapped + frac * nxt_th

    step = np.diff(pos30, axis=0, prepend=pos30[:1])
    speed30 = np.linalg.norm(step, axis=2) * 30.0
    return pos30, theta30, speed30


def _render_skeletons(pos30, theta30, speed30, deltas30, rng, noise_scale, topology):
    """Place the local-frame rig into world coordinates at every 30 Hz frame."""
    frames, n_players = pos30.shape[:2]
    names = topology.joints
    missing = [n for n in names if n not in BASE_POSE]
    if missing:
        raise ValueError(f"no rest pose for joints {missing}")
    base = np.array([BASE_POSE[n] for n in names])  # (J, 3) local

    local = np.broadcast_to(base, (frames, n_players) + base.shape).copy()
    local += deltas30

    # simple gait: forward swing of opposite limbs scaled by speed
    phase0 = rng.uniform(0.0, 2 * math.pi, n_players)
    tgrid = np.arange(frames) / 30.0
    phase = 2 * math.pi * 1.6 * tgrid[:, None] + phase0[None, :]
    amp = np.clip(speed30 / 10.0, 0.0, 1.0) * 0.5
    swing = amp * np.sin(phase)
    for name in _SWING_LEFT:
        local[:, :, topology.joint_index[name], 1] += swing
    for name in _SWING_RIGHT:
        local[:, :, topology.joint_index[name], 1] -= swing

    head = np.stack([np.cos(theta30), np.sin(theta30)], axis=-1)  # (F, N, 2)
    left = np.stack([-np.sin(theta30), np.cos(theta30)], axis=-1)
    lat, fwd, height = local[..., 0], local[..., 1], local[..., 2]
    world = np.zeros((frames, n_players, len(names), 3))
    world[..., 0] = pos30[..., None, 0] + lat * left[..., None, 0] + fwd * head[..., None, 0]
    world[..., 1] = pos30[..., None, 1] + lat * left[..., None, 1] + fwd * head[..., None, 1]
    world[..., 2] = height

    noise = rng.normal(0.0, noise_scale, world.shape) if noise_scale > 0 else 0.0
    world = world + noise

    # generator contract: the root's planar track is exactly the centroid
    root = topology.joint_index[topology.root]
    world[:, :, root, 0] = pos30[..., 0]
    world[:, :, root, 1] = pos30[..., 1]
    return world


# ----------------------------------------------------------------------
# script sampling
# ----------------------------------------------------------------------

SCRIPT_MARGIN = 15
ASSIST_NEGATIVE_KINDS = ("dribbles", "miss", "late")


def sample_script(kind: str, n_steps: int, n_players: int, rng: np.random.Generator,
                  margin: int | None = None) -> PlayScript:
    """Draw a randomized script of the given kind with feasible timing.

    The default margin keeps anchors 3 s from both ends on full-length plays
    and shrinks proportionally on short ones.
    """
    m = margin if margin is not None else min(SCRIPT_MARGIN, max(8, n_steps // 3))
    hi = n_steps - m
    if hi - 5 <= m:
        raise ScriptTimingError(f"n_steps={n_steps} cannot fit margin {m}")
    offense = list(range((n_players + 1) // 2))
    defense = list(range((n_players + 1) // 2, n_players))

    if kind == "iso_shot":
        # shot type is left unset: the generator derives it from the sampled
        # spot, keeping the centroids symmetric across candidates
        return PlayScript(
            kind="iso_shot",
            actors={"shooter": int(rng.choice(offense))},
            event_frame=int(rng.integers(m, hi + 1)),
            shot_made=bool(rng.random() < 0.7),
            margin=m,
        )
    if kind == "assist":
        positive = rng.random() < 0.6
        rts_limit = hi - PASS_FLIGHT_STEPS - m  # latest feasible reception-to-shot gap
        rts, dribbles, made = int(rng.choice((6, 8, 10))), int(rng.integers(0, 3)), True
        if not positive:
            feasible = [k for k in ASSIST_NEGATIVE_KINDS if k != "late" or rts_limit >= 16]
            neg = rng.choice(feasible)
            if neg == "dribbles":
                dribbles = 3
            elif neg == "miss":
                made = False
            else:
                rts = 16
        t_pass = int(rng.integers(m, hi - PASS_FLIGHT_STEPS - rts + 1))
        order = rng.permutation(offense[:2])
        return PlayScript(
            kind="assist",
            actors={"passer": int(order[0]), "receiver": int(order[1])},
            event_frame=t_pass + PASS_FLIGHT_STEPS + rts,
            pass_frame=t_pass,
            n_dribbles=dribbles,
            shot_made=made,
            reception_to_shot=rts,
            margin=m,
        )
    if kind == "pick":
        order = rng.permutation(offense[:2])
        guards = rng.permutation(defense[:2]) if len(defense) >= 2 else defense
        return PlayScript(
            kind="pick",
            actors={"handler": int(order[0]), "screener": int(order[1]),
                    "defender": int(guards[0])},
            event_frame=int(rng.integers(m, hi - 5)),
            margin=m,
        )
    if kind == "random_motion":
        return PlayScript(kind="random_motion", event_frame=n_steps // 2, margin=m)
    raise ValueError(f"unknown script kind {kind!r}")


def sample_plays(
    topology: SkeletonTopology,
    n_plays: int,
    n_players: int = 4,
    n_steps: int = 50,
    seed: int = 0,
    mix: dict[str, float] | None = None,
    noise_scale: float = 0.05,
) -> list[PlaySequence]:
    """Generate a seeded dataset with the given script-kind mixture."""
    mix = mix or {"iso_shot": 0.4, "assist": 0.25, "pick": 0.2, "random_motion": 0.15}
    if n_players < 4:
        mix = {k: w for k, w in mix.items() if k in ("iso_shot", "random_motion")}
        if not mix:
            mix = {"iso_shot": 1.0}
    kinds = sorted(mix)
    weights = np.array([mix[k] for k in kinds], dtype=float)
    weights = weights / weights.sum()
    rng = np.random.default_rng(seed)
    plays = []
    for k in range(n_plays):
        kind = str(rng.choice(kinds, p=weights))
        script = sample_script(kind, n_steps, n_players, rng)
        script = PlayScript(**{**script.__dict__, "noise_scale": noise_scale})
        plays.append(generate_play(script, topology, n_players, n_steps,
                                   seed=int(rng.integers(0, 2**31 - 1))))
    return plays
