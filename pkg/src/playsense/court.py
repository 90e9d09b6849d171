"""Court geometry and torso-orientation primitives.

All coordinates are in feet on a standard 94x50 court. The x axis runs
baseline to baseline, the y axis sideline to sideline, and the origin sits
in the corner so the court occupies [0, 94] x [0, 50]. Skeletal joints use
the same planar frame plus a z-up height component.
"""

from __future__ import annotations

import numpy as np

COURT_LENGTH = 94.0
COURT_WIDTH = 50.0
COURT_EXTENT = (COURT_LENGTH, COURT_WIDTH)

LEFT_BASKET = np.array([5.25, 25.0])
RIGHT_BASKET = np.array([88.75, 25.0])

# Three-point line: 23.75 ft arc with 22 ft corner segments that run
# 14 ft out from each baseline.
ARC_RADIUS = 23.75
CORNER_THREE_OFFSET = 22.0
CORNER_ZONE_DEPTH = 14.0

# 90-degree counter-clockwise rotation.
_ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])

DEGENERATE_TOL = 1e-6
FALLBACK_NORMAL = np.array([0.0, 1.0])


class DegeneratePoseError(ValueError):
    """Raised when the two shoulder joints coincide and no orientation exists."""


def basket_position(side: str) -> np.ndarray:
    if side == "left":
        return LEFT_BASKET.copy()
    if side == "right":
        return RIGHT_BASKET.copy()
    raise ValueError(f"unknown basket side {side!r}; expected 'left' or 'right'")


def compute_shoulder_normal(u_left, u_right, tol: float = DEGENERATE_TOL) -> np.ndarray:
    """Unit vector perpendicular to the left-to-right shoulder segment.

    The normal is the shoulder segment rotated 90 degrees counter-clockwise
    and normalized, so it points where the torso faces when the left shoulder
    is on the player's left. Raises :class:`DegeneratePoseError` when the
    shoulders are closer than ``tol``.
    """
    u_left = np.asarray(u_left, dtype=np.float64)
    u_right = np.asarray(u_right, dtype=np.float64)
    w = u_right - u_left
    norm = float(np.linalg.norm(w))
    if norm <= tol:
        raise DegeneratePoseError(
            f"shoulder joints coincide (separation {norm:.3e} <= {tol:.3e} ft)"
        )
    return _ROT90 @ (w / norm)


def shoulder_normal_track(joints30: np.ndarray, left_idx: int, right_idx: int) -> np.ndarray:
    """Per-timestep torso normals sampled from 30 Hz joints at each 5 Hz step.

    ``joints30`` has shape (6T, N, J, 3); the normal for step t uses frame 6t.
    Degenerate frames fall back to the player's previous valid normal, or to
    the canonical (0, 1) if none exists yet.
    """
    frames = np.asarray(joints30)
    if frames.ndim != 4 or frames.shape[0] % 6 != 0:
        raise ValueError(f"joints30 must have shape (6T, N, J, 3), got {frames.shape}")
    n_steps = frames.shape[0] // 6
    n_players = frames.shape[1]
    normals = np.zeros((n_steps, n_players, 2), dtype=np.float64)
    last = np.tile(FALLBACK_NORMAL, (n_players, 1))
    for t in range(n_steps):
        for i in range(n_players):
            u_l = frames[6 * t, i, left_idx, :2]
            u_r = frames[6 * t, i, right_idx, :2]
            try:
                last[i] = compute_shoulder_normal(u_l, u_r)
            except DegeneratePoseError:
                pass
            normals[t, i] = last[i]
    return normals


def beyond_arc(point, basket) -> bool:
    """True when the point is behind the three-point line for that basket.

    In the corner zones (within 14 ft of the baseline) the line is straight at
    22 ft laterally; elsewhere it is the 23.75 ft arc around the basket.
    """
    point = np.asarray(point, dtype=np.float64)
    basket = np.asarray(basket, dtype=np.float64)
    near_left_baseline = basket[0] < COURT_LENGTH / 2
    depth = point[0] if near_left_baseline else COURT_LENGTH - point[0]
    if depth <= CORNER_ZONE_DEPTH:
        return bool(abs(point[1] - COURT_WIDTH / 2) >= CORNER_THREE_OFFSET)
    return bool(np.linalg.norm(point - basket) >= ARC_RADIUS)


def in_attacking_half(point, basket) -> bool:
    point = np.asarray(point, dtype=np.float64)
    basket = np.asarray(basket, dtype=np.float64)
    if basket[0] < COURT_LENGTH / 2:
        return bool(point[0] <= COURT_LENGTH / 2)
    return bool(point[0] >= COURT_LENGTH / 2)


def clamp_to_court(positions: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """Clamp planar coordinates into [margin, extent - margin] per axis."""
    out = np.array(positions, dtype=np.float64, copy=True)
    out[..., 0] = np.clip(out[..., 0], margin, COURT_LENGTH - margin)
    out[..., 1] = np.clip(out[..., 1], margin, COURT_WIDTH - margin)
    return out


def signed_side(point, line_from, line_to) -> float:
    """Sign of the cross product placing ``point`` left (+) or right (-) of the line."""
    point = np.asarray(point, dtype=np.float64)
    a = np.asarray(line_from, dtype=np.float64)
    b = np.asarray(line_to, dtype=np.float64)
    d = b - a
    r = point - a
    return float(np.sign(d[0] * r[1] - d[1] * r[0]))
