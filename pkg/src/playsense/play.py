"""Domain types for recorded play segments.

A play is one continuous gameplay segment: 5 Hz planar centroids per player,
30 Hz 3D joints, and per-step binary event indicators over the nine-event
vocabulary. The ball is deliberately kept out of the model inputs; it lives
in an optional sidecar consumed only by the geometric labelers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .court import COURT_EXTENT

EVENT_NAMES = (
    "no_action",
    "free_throw",
    "shot_attempt",
    "pass",
    "deflection",
    "block",
    "rebound",
    "steal",
    "dribble",
)
N_EVENTS = len(EVENT_NAMES)

# At most one of these may fire for a given (step, player).
EXCLUSIVE_EVENTS = ("shot_attempt", "pass", "steal")

SHOT_TYPES = ("dunk", "hook", "jumpshot", "layup")

STEP_RATE_HZ = 5
JOINT_RATE_HZ = 30
UPSAMPLE = JOINT_RATE_HZ // STEP_RATE_HZ


def event_index(name: str) -> int:
    try:
        return EVENT_NAMES.index(name)
    except ValueError:
        raise ValueError(f"unknown event {name!r}; vocabulary: {', '.join(EVENT_NAMES)}") from None


@dataclass(frozen=True)
class EventVocabulary:
    """Ordered nine-event vocabulary shared by labels and projection heads."""

    names: tuple[str, ...] = EVENT_NAMES

    def __post_init__(self):
        if self.names != EVENT_NAMES:
            raise ValueError("event vocabulary is fixed; expected the canonical nine names")

    def index(self, name: str) -> int:
        return event_index(name)

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class PassEvent:
    release_frame: int
    reception_frame: int
    passer: int
    receiver: int


@dataclass(frozen=True)
class ShotEvent:
    frame: int
    shooter: int
    made: bool
    shot_type: str
    location: tuple[float, float]
    three_point: bool


@dataclass(frozen=True)
class DribbleEvent:
    frame: int
    player: int


@dataclass
class BallSidecar:
    """Ball state emitted by the generator for the labelers, never the model.

    ``handler`` is -1 while the ball is in flight or after a shot.
    """

    position: np.ndarray  # (T, 2) float32
    handler: np.ndarray  # (T,) int32
    passes: list[PassEvent] = field(default_factory=list)
    dribbles: list[DribbleEvent] = field(default_factory=list)
    shots: list[ShotEvent] = field(default_factory=list)

    def validate(self, n_steps: int):
        if self.position.shape != (n_steps, 2):
            raise ValueError(f"ball position must be ({n_steps}, 2), got {self.position.shape}")
        if self.handler.shape != (n_steps,):
            raise ValueError(f"ball handler must be ({n_steps},), got {self.handler.shape}")


SCRIPT_KINDS = ("pick", "assist", "iso_shot", "random_motion")


@dataclass(frozen=True)
class PlayScript:
    """Scenario recipe consumed by the synthetic generator.

    Frames index the 5 Hz timeline. ``margin`` keeps every scripted event far
    enough from both sequence ends for label windows and probe horizons.
    """

    kind: str
    actors: dict = field(default_factory=dict)
    event_frame: int = 30
    pass_frame: int | None = None
    noise_scale: float = 0.05
    shot_type: str | None = None
    shot_made: bool = True
    n_dribbles: int = 0
    three_point: bool = False
    reception_to_shot: int | None = None
    attack: str = "left"
    margin: int = 16

    def validate(self, n_players: int, n_steps: int):
        if self.kind not in SCRIPT_KINDS:
            raise ValueError(f"unknown script kind {self.kind!r}; expected one of {SCRIPT_KINDS}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if self.kind in ("pick", "assist") and n_players < 4:
            raise ValueError(f"{self.kind} scripts need at least 4 players, got {n_players}")
        if self.shot_type is not None and self.shot_type not in SHOT_TYPES:
            raise ValueError(f"unknown shot type {self.shot_type!r}")
        lo, hi = self.margin, n_steps - self.margin
        frames = [self.event_frame]
        if self.pass_frame is not None:
            frames.append(self.pass_frame)
        for f in frames:
            if not lo <= f <= hi:
                raise ValueError(
                    f"scripted frame {f} outside [{lo}, {hi}] for n_steps={n_steps}"
                )
        for role, idx in self.actors.items():
            if not 0 <= idx < n_players:
                raise ValueError(f"actor {role}={idx} outside player range [0, {n_players})")


@dataclass
class PlaySequence:
    """One generated or recorded play segment.

    ``positions`` is the 5 Hz (T, N, 2) centroid track, ``joints30`` the
    30 Hz (6T, N, J, 3) joint track, ``events`` the (T, N, 9) indicator
    matrix. ``positions[t, i]`` equals the planar mid-hip joint at 30 Hz
    frame 6t by generator contract.
    """

    positions: np.ndarray
    joints30: np.ndarray
    events: np.ndarray
    seed: int
    player_ids: np.ndarray  # (N,) int32 stable role ids
    offense: np.ndarray  # (N,) bool, True for attacking players
    court_extent: tuple[float, float] = COURT_EXTENT
    meta: dict = field(default_factory=dict)
    ball: BallSidecar | None = None

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0]

    @property
    def n_players(self) -> int:
        return self.positions.shape[1]

    @property
    def n_joints(self) -> int:
        return self.joints30.shape[2]

    def validate(self, mid_hip_index: int | None = None):
        t, n = self.n_steps, self.n_players
        if self.positions.ndim != 3 or self.positions.shape[2] != 2:
            raise ValueError(f"positions must be (T, N, 2), got {self.positions.shape}")
        if self.joints30.shape[:2] != (UPSAMPLE * t, n) or self.joints30.shape[3] != 3:
            raise ValueError(
                f"joints30 must be ({UPSAMPLE * t}, {n}, J, 3), got {self.joints30.shape}"
            )
        if self.events.shape != (t, n, N_EVENTS):
            raise ValueError(f"events must be ({t}, {n}, {N_EVENTS}), got {self.events.shape}")
        if self.player_ids.shape != (n,) or self.offense.shape != (n,):
            raise ValueError("player_ids and offense must have one entry per player")

        length, width = self.court_extent
        x, y = self.positions[..., 0], self.positions[..., 1]
        if (x < 0).any() or (x > length).any() or (y < 0).any() or (y > width).any():
            raise ValueError("positions outside the court extent")

        uniq = np.unique(self.events)
        if not np.isin(uniq, (0, 1)).all():
            raise ValueError("events must be binary")
        exclusive = [event_index(name) for name in EXCLUSIVE_EVENTS]
        if (self.events[:, :, exclusive].sum(axis=2) > 1).any():
            raise ValueError("shot_attempt, pass and steal are mutually exclusive per (t, i)")

        if mid_hip_index is not None:
            hips = self.joints30[:: UPSAMPLE, :, mid_hip_index, :2]
            if not np.array_equal(hips.astype(np.float32), self.positions):
                raise ValueError("positions do not match the mid-hip projection at 30 Hz frame 6t")
        if self.ball is not None:
            self.ball.validate(t)
