"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .play import PlaySequence
from .topology import SkeletonTopology


def check_play_list(X, topology: SkeletonTopology | None = None) -> list[PlaySequence]:
    """Validate a homogeneous list of plays and return it."""
    if not isinstance(X, (list, tuple)) or not X:
        raise ValueError("expected a non-empty list of PlaySequence")
    plays = list(X)
    for k, seq in enumerate(plays):
        if not isinstance(seq, PlaySequence):
            raise TypeError(f"element {k} is {type(seq).__name__}, expected PlaySequence")
        mid_hip = topology.joint_index[topology.root] if topology is not None else None
        seq.validate(mid_hip_index=mid_hip)
        if topology is not None and seq.n_joints != topology.n_joints:
            raise ValueError(
                f"play {k} has {seq.n_joints} joints, rig expects {topology.n_joints}"
            )
    shapes = {(p.n_steps, p.n_players) for p in plays}
    if len(shapes) > 1:
        raise ValueError(f"plays must share (T, N); got {sorted(shapes)}")
    return plays


def check_feature_matrix(X, y=None):
    """2D float matrix plus optional aligned label vector."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2D feature matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains non-finite values")
    if y is None:
        return X
    y = np.asarray(y)
    if len(y) != len(X):
        raise ValueError(f"X has {len(X)} rows but y has {len(y)}")
    return X, y
