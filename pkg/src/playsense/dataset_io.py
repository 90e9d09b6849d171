"""Dataset serialization.

Plays are stored in the section container with utf-8 metadata and 32-bit
float matrices, so a save/load round trip is bit-exact. The ball sidecar is
an optional per-play section group; plays recorded without ball data load
back with ``ball=None``.
"""

from __future__ import annotations

import json

import numpy as np

from .container import ContainerError, read_container, write_container
from .play import BallSidecar, DribbleEvent, PassEvent, PlaySequence, ShotEvent

DATASET_MAGIC = b"PSPLAYS1"
DATASET_VERSION = 1


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def save_dataset(plays: list[PlaySequence], path) -> None:
    sections = [
        ("meta", f"dataset_version={DATASET_VERSION}\nn_plays={len(plays)}\n"),
    ]
    for k, seq in enumerate(plays):
        prefix = f"play{k}"
        head = {
            "seed": seq.seed,
            "court_extent": list(seq.court_extent),
            "meta": seq.meta,
            "has_ball": seq.ball is not None,
        }
        if seq.ball is not None:
            head["passes"] = [vars(p) for p in seq.ball.passes]
            head["dribbles"] = [vars(d) for d in seq.ball.dribbles]
            head["shots"] = [vars(s) for s in seq.ball.shots]
        sections.append((f"{prefix}/head", json.dumps(head, default=_jsonable)))
        sections.append((f"{prefix}/positions", seq.positions.astype(np.float32)))
        sections.append((f"{prefix}/joints30", seq.joints30.astype(np.float32)))
        sections.append((f"{prefix}/events", seq.events.astype(np.float32)))
        sections.append((f"{prefix}/player_ids", seq.player_ids.astype(np.float32)))
        sections.append((f"{prefix}/offense", seq.offense.astype(np.float32)))
        if seq.ball is not None:
            sections.append((f"{prefix}/ball_position", seq.ball.position.astype(np.float32)))
            sections.append((f"{prefix}/ball_handler", seq.ball.handler.astype(np.float32)))
    write_container(path, DATASET_MAGIC, sections)


def load_dataset(path) -> list[PlaySequence]:
    sections = read_container(path, DATASET_MAGIC)
    if "meta" not in sections:
        raise ContainerError(f"{path}: missing dataset meta section")
    meta = dict(
        line.split("=", 1) for line in sections["meta"].splitlines() if "=" in line
    )
    version = int(meta.get("dataset_version", -1))
    if version != DATASET_VERSION:
        raise ContainerError(f"{path}: dataset version {version} not supported")
    n_plays = int(meta["n_plays"])

    plays = []
    for k in range(n_plays):
        prefix = f"play{k}"
        try:
            head = json.loads(sections[f"{prefix}/head"])
            positions = sections[f"{prefix}/positions"]
            joints30 = sections[f"{prefix}/joints30"]
            events = sections[f"{prefix}/events"].astype(np.uint8)
            player_ids = sections[f"{prefix}/player_ids"].astype(np.int32)
            offense = sections[f"{prefix}/offense"].astype(bool)
        except KeyError as exc:
            raise ContainerError(f"{path}: missing section for play {k}: {exc}") from None

        ball = None
        if head.get("has_ball"):
            ball = BallSidecar(
                position=sections[f"{prefix}/ball_position"],
                handler=sections[f"{prefix}/ball_handler"].astype(np.int32),
                passes=[PassEvent(**p) for p in head.get("passes", [])],
                dribbles=[DribbleEvent(**d) for d in head.get("dribbles", [])],
                shots=[ShotEvent(**{**s, "location": tuple(s["location"])})
                       for s in head.get("shots", [])],
            )
        plays.append(
            PlaySequence(
                positions=positions,
                joints30=joints30,
                events=events,
                seed=int(head["seed"]),
                player_ids=player_ids,
                offense=offense,
                court_extent=tuple(head["court_extent"]),
                meta=head.get("meta", {}),
                ball=ball,
            )
        )
    return plays
