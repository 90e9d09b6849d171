"""Training objectives: step binning, temporal event windows and the losses.

Per-step movement deltas are classified into a 121-cell grid (11 cells of
1 ft per axis, centered on zero delta, outliers clamped to the edge cells).
Event targets are expanded into past / current / future window indicators
before the binary cross-entropy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from .play import N_EVENTS, STEP_RATE_HZ

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12
N_REGIONS = 3
REGION_NAMES = ("past", "current", "future")


@dataclass(frozen=True)
class BinGrid:
    """Row-major 11x11 grid over planar deltas; index = x_cell * 11 + y_cell."""

    half_extent: float = 5.5
    resolution: float = 1.0
    bins_per_axis: int = 11

    @property
    def n_bins(self) -> int:
        return self.bins_per_axis**2

    def __post_init__(self):
        span = self.bins_per_axis * self.resolution
        if abs(span - 2 * self.half_extent) > 1e-9:
            raise ValueError("grid cells must tile [-half_extent, half_extent) exactly")


DEFAULT_GRID = BinGrid()


def bin_deltas(deltas, grid: BinGrid = DEFAULT_GRID) -> np.ndarray:
    """Vectorized delta -> bin index, clamping out-of-range components."""
    d = np.asarray(deltas, dtype=np.float64)
    if not np.isfinite(d).all():
        raise ValueError("deltas must be finite")
    eps = 1e-9  # keep +half_extent inside the top cell after clamping
    clamped = np.clip(d, -grid.half_extent, grid.half_extent - eps)
    cells = np.floor((clamped + grid.half_extent) / grid.resolution).astype(np.int64)
    cells = np.clip(cells, 0, grid.bins_per_axis - 1)
    return cells[..., 0] * grid.bins_per_axis + cells[..., 1]


def bin_delta(delta, grid: BinGrid = DEFAULT_GRID) -> int:
    return int(bin_deltas(np.asarray(delta).reshape(1, 2), grid)[0])


def bin_center(index: int, grid: BinGrid = DEFAULT_GRID) -> np.ndarray:
    x_cell, y_cell = divmod(int(index), grid.bins_per_axis)
    origin = -grid.half_extent + grid.resolution / 2
    return np.array([origin + x_cell * grid.resolution, origin + y_cell * grid.resolution])


@dataclass(frozen=True)
class WindowConfig:
    """Temporal window extents for past/future event indicators."""

    delta_past_s: float = 2.0
    delta_future_s: float = 2.0
    rate_hz: int = STEP_RATE_HZ

    def __post_init__(self):
        if self.delta_past_s <= 0 or self.delta_future_s <= 0:
            raise ValueError("window extents must be positive")

    @property
    def past_steps(self) -> int:
        return round(self.delta_past_s * self.rate_hz)

    @property
    def future_steps(self) -> int:
        return round(self.delta_future_s * self.rate_hz)


def derive_event_windows(events: np.ndarray, cfg: WindowConfig = WindowConfig()) -> np.ndarray:
    """(T, N, 9) indicators -> (T, N, 9, 3) with past/current/future regions.

    Window terms that fall outside [0, T) are simply skipped; a nonexistent
    step cannot host an event.
    """
    ev = np.asarray(events)
    if ev.ndim != 3 or ev.shape[2] != N_EVENTS:
        raise ValueError(f"events must be (T, N, {N_EVENTS}), got {ev.shape}")
    n_steps = ev.shape[0]
    out = np.zeros(ev.shape + (N_REGIONS,), dtype=ev.dtype)
    out[..., 1] = ev
    for tau in range(1, cfg.past_steps + 1):
        if tau >= n_steps:
            break
        np.maximum(out[tau:, :, :, 0], ev[:-tau], out=out[tau:, :, :, 0])
    for tau in range(1, cfg.future_steps + 1):
        if tau >= n_steps:
            break
        np.maximum(out[:-tau, :, :, 2], ev[tau:], out=out[:-tau, :, :, 2])
    return out


def trajectory_nll(probs: torch.Tensor, truth_bins: torch.Tensor) -> torch.Tensor:
    """Mean negative log-likelihood of the true bins.

    ``probs`` is (M, 121) rows summing to one; ``truth_bins`` is (M,) long.
    Probabilities below the floor are clamped and flagged in the log.
    """
    probs = torch.as_tensor(probs)
    truth = torch.as_tensor(truth_bins, dtype=torch.long, device=probs.device)
    if probs.ndim != 2:
        raise ValueError(f"probs must be 2D (rows, bins), got shape {tuple(probs.shape)}")
    if truth.shape != probs.shape[:1]:
        raise ValueError("one truth bin per probability row required")
    picked = probs.gather(1, truth[:, None]).squeeze(1)
    if bool((picked < PROB_FLOOR).any()):
        log.warning("trajectory_nll clamped %d probabilities below %g",
                    int((picked < PROB_FLOOR).sum()), PROB_FLOOR)
    return -(picked.clamp_min(PROB_FLOOR).log()).mean()


def event_bce(pred: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Binary cross-entropy summed over events and regions, averaged over (t, i).

    Shapes are (..., N_EVENTS, N_REGIONS) with matching leading dims; the
    leading dims index (t, i) pairs.
    """
    pred = torch.as_tensor(pred)
    truth = torch.as_tensor(truth, dtype=pred.dtype, device=pred.device)
    if pred.shape != truth.shape or pred.shape[-2:] != (N_EVENTS, N_REGIONS):
        raise ValueError(
            f"pred/truth must both end in ({N_EVENTS}, {N_REGIONS}); "
            f"got {tuple(pred.shape)} vs {tuple(truth.shape)}"
        )
    # the floor must stay representable next to 1.0, or float32 saturation
    # turns (1 - truth) * log(1 - p) into 0 * -inf
    floor = max(PROB_FLOOR, float(torch.finfo(pred.dtype).eps))
    p = pred.clamp(floor, 1.0 - floor)
    bce = -(truth * p.log() + (1.0 - truth) * (1.0 - p).log())
    return bce.sum(dim=(-1, -2)).mean()


def total_loss(l_traj, l_events, alpha: float):
    """Convex combination alpha * trajectory + (1 - alpha) * events."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * l_traj + (1.0 - alpha) * l_events
