"""Joint pretraining loop, per-step evaluation and numerical verification.

Look-ahead rows are teacher forced throughout: both during training and for
step-wise NLL reporting they carry ground-truth next-step values, so the
reported likelihoods condition on the true past and, for lower-indexed
players, the true committed next moves.
"""

from __future__ import annotations

import csv
import io
import logging
import zlib
from dataclasses import dataclass, field

import numpy as np
import torch

from .court import shoulder_normal_track
from .model import PlayModel, get_variant, seed_parameters
from .objectives import (
    WindowConfig,
    bin_deltas,
    derive_event_windows,
    event_bce,
    total_loss,
    trajectory_nll,
)
from .play import PlaySequence
from .topology import SkeletonTopology

log = logging.getLogger(__name__)

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries a diagnostic snapshot."""

    def __init__(self, step: int, snapshot: dict):
        super().__init__(f"training diverged at step {step}: {snapshot}")
        self.step = step
        self.snapshot = snapshot


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-4
    batch_size: int = 8
    epochs: int = 20
    alpha: float = 0.5
    seed: int = 0
    betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    precision: str = "float32"
    permute_players: bool = True
    windows: WindowConfig = field(default_factory=WindowConfig)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.precision not in _DTYPES:
            raise ValueError(f"precision must be one of {sorted(_DTYPES)}")

    @property
    def dtype(self) -> torch.dtype:
        return _DTYPES[self.precision]


@dataclass
class LossTrace:
    """Per-step and per-epoch loss records."""

    steps: list[tuple[int, float, float, float]] = field(default_factory=list)
    epochs: list[tuple[int, float, float, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["step", "l_traj", "l_events", "l_total"])
        for row in self.steps:
            writer.writerow([row[0], f"{row[1]:.10g}", f"{row[2]:.10g}", f"{row[3]:.10g}"])
        return buf.getvalue()


@dataclass
class PlayBatch:
    """Stacked play tensors plus precomputed targets."""

    positions: torch.Tensor  # (B, T, N, 2)
    joints30: torch.Tensor  # (B, 6T, N, J, 3)
    normals: torch.Tensor  # (B, T, N, 2)
    player_ids: torch.Tensor  # (B, N)
    traj_bins: torch.Tensor  # (B, T - 1, N)
    event_targets: torch.Tensor  # (B, T - 1, N, 9, 3)


def play_arrays(seq: PlaySequence, topology: SkeletonTopology,
                windows: WindowConfig) -> dict[str, np.ndarray]:
    left = topology.joint_index["l_shoulder"]
    right = topology.joint_index["r_shoulder"]
    positions = seq.positions.astype(np.float64)
    bins = bin_deltas(positions[1:] - positions[:-1])
    events_w = derive_event_windows(seq.events, windows)[:-1].astype(np.float64)
    return {
        "positions": positions,
        "joints30": seq.joints30.astype(np.float64),
        "normals": shoulder_normal_track(seq.joints30, left, right),
        "player_ids": seq.player_ids.astype(np.int64),
        "traj_bins": bins,
        "event_targets": events_w,
    }


def build_batch(arrays: list[dict[str, np.ndarray]], dtype: torch.dtype,
                permutations: list[np.ndarray] | None = None) -> PlayBatch:
    shapes = {a["positions"].shape for a in arrays}
    if len(shapes) > 1:
        raise ValueError(f"plays in one batch must share (T, N); got {sorted(shapes)}")

    def stack(key, out_dtype=dtype, player_axis=1):
        mats = []
        for k, a in enumerate(arrays):
            m = a[key]
            if permutations is not None:
                m = np.take(m, permutations[k], axis=player_axis)
            mats.append(m)
        return torch.as_tensor(np.stack(mats)).to(out_dtype)

    return PlayBatch(
        positions=stack("positions"),
        joints30=stack("joints30"),
        normals=stack("normals"),
        player_ids=stack("player_ids", torch.long, player_axis=0),
        traj_bins=stack("traj_bins", torch.long),
        event_targets=stack("event_targets"),
    )


def compute_loss(model: PlayModel, batch: PlayBatch, alpha: float):
    """Forward the batch and return (l_traj, l_events, l_total) tensors.

    When a variant disables one objective the other's graph is the whole
    loss; the unused heads receive no gradient at all.
    """
    outputs = model(batch.positions, batch.joints30, batch.normals, batch.player_ids)
    n_bins = outputs.traj_probs.shape[-1]
    zero = torch.zeros((), dtype=outputs.zhat.dtype)

    effective_alpha = 1.0 if not model.variant.use_events else alpha
    l_traj = zero
    if effective_alpha > 0.0:
        l_traj = trajectory_nll(outputs.traj_probs.reshape(-1, n_bins),
                                batch.traj_bins.reshape(-1))
    l_events = zero
    if effective_alpha < 1.0:
        l_events = event_bce(outputs.event_probs, batch.event_targets)
    return l_traj, l_events, total_loss(l_traj, l_events, effective_alpha)


def pretrain(
    plays: list[PlaySequence],
    model: PlayModel,
    cfg: TrainConfig = TrainConfig(),
) -> LossTrace:
    """Optimize the model in place over the plays; returns the loss trace.

    Deterministic given (cfg.seed, cfg.precision): parameter init, batch
    order and per-sample player permutations all derive from the seed.
    """
    if not plays:
        raise ValueError("dataset is empty")
    model.to(cfg.dtype)
    seed_parameters(model, cfg.seed)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate,
                                 betas=cfg.betas, eps=cfg.adam_eps)
    arrays = [play_arrays(p, model.topology, cfg.windows) for p in plays]
    rng = np.random.default_rng(cfg.seed)
    n_players = plays[0].n_players

    trace = LossTrace()
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(arrays))
        epoch_sums = np.zeros(3)
        n_batches = 0
        for lo in range(0, len(order), cfg.batch_size):
            chosen = order[lo : lo + cfg.batch_size]
            perms = None
            if cfg.permute_players:
                perms = [rng.permutation(n_players) for _ in chosen]
            batch = build_batch([arrays[k] for k in chosen], cfg.dtype, perms)

            optimizer.zero_grad()
            l_traj, l_events, l_total = compute_loss(model, batch, cfg.alpha)
            if not torch.isfinite(l_total):
                raise TrainingDivergedError(step, {
                    "epoch": epoch,
                    "l_traj": float(l_traj),
                    "l_events": float(l_events),
                })
            l_total.backward()
            optimizer.step()

            record = (step, float(l_traj.detach()), float(l_events.detach()),
                      float(l_total.detach()))
            trace.steps.append(record)
            epoch_sums += record[1:]
            n_batches += 1
            step += 1
        mean = epoch_sums / max(n_batches, 1)
        trace.epochs.append((epoch, mean[0], mean[1], mean[2]))
        log.info("epoch %d: l_traj=%.4f l_events=%.4f l_total=%.4f",
                 epoch, mean[0], mean[1], mean[2])
    return trace


def eval_nll_by_timestep(model: PlayModel, plays: list[PlaySequence],
                         windows: WindowConfig = WindowConfig()) -> np.ndarray:
    """Teacher-forced mean trajectory NLL per usable step across the plays."""
    if not plays:
        raise ValueError("dataset is empty")
    t_eff = plays[0].n_steps - 1
    model.eval()
    sums = np.zeros(t_eff)
    counts = np.zeros(t_eff)
    with torch.no_grad():
        for seq in plays:
            if seq.n_steps - 1 != t_eff:
                raise ValueError("plays must share the step count for per-step NLL")
            arrays = play_arrays(seq, model.topology, windows)
            batch = build_batch([arrays], model.dtype)
            outputs = model(batch.positions, batch.joints30, batch.normals,
                            batch.player_ids)
            probs = outputs.traj_probs[0]  # (t_eff, N, 121)
            picked = probs.gather(-1, batch.traj_bins[0][..., None]).squeeze(-1)
            nll = -picked.clamp_min(1e-12).log()
            sums += nll.sum(dim=1).numpy()
            counts += nll.shape[1]
    return sums / counts


def gradient_check(
    model: PlayModel,
    plays: list[PlaySequence],
    alpha: float = 0.5,
    eps: float = 1e-5,
    n_coords: int = 100,
    seed: int = 0,
    windows: WindowConfig = WindowConfig(),
) -> float:
    """Max relative error between backprop and central-difference gradients.

    Requires a float64 model; a random sample of parameter coordinates is
    perturbed by +-eps.

    Central differences are only a valid derivative oracle where the loss is
    smooth within the perturbation; a coordinate whose +-eps step crosses a
    rectifier kink yields a difference quotient that does not converge as
    eps shrinks. Each sampled coordinate is therefore screened by comparing
    the quotient at eps with the one at eps / 2; non-convergent coordinates
    sit on a kink and are resampled. The screen uses numeric values only, so
    a genuinely wrong analytic gradient cannot hide behind it.

    The relative-error denominator is floored at 1e-5: float64 quotients of
    a loss this size carry ~1e-9 of cancellation noise, so gradients below
    the floor are effectively held to that absolute bar instead.
    """
    if model.dtype != torch.float64:
        raise ValueError("gradient_check requires a float64 model")
    model.eval()
    arrays = [play_arrays(p, model.topology, windows) for p in plays]
    batch = build_batch(arrays, torch.float64)

    model.zero_grad()
    _, _, loss = compute_loss(model, batch, alpha)
    loss.backward()
    params = [p for p in model.parameters() if p.grad is not None]
    grads = torch.cat([p.grad.reshape(-1) for p in params])
    sizes = [p.numel() for p in params]
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    rng = np.random.default_rng(seed)
    total = int(offsets[-1])
    order = rng.permutation(total)

    def loss_at() -> float:
        with torch.no_grad():
            _, _, value = compute_loss(model, batch, alpha)
        return float(value)

    def quotient(coord: int, step: float) -> float:
        p_idx = int(np.searchsorted(offsets, coord, side="right") - 1)
        flat = params[p_idx].data.reshape(-1)
        local = int(coord - offsets[p_idx])
        original = float(flat[local])
        flat[local] = original + step
        upper = loss_at()
        flat[local] = original - step
        lower = loss_at()
        flat[local] = original
        return (upper - lower) / (2 * step)

    worst = 0.0
    checked = 0
    skipped = 0
    for coord in order:
        if checked >= min(n_coords, total):
            break
        num_full = quotient(int(coord), eps)
        num_half = quotient(int(coord), eps / 2)
        scale_n = max(abs(num_full), abs(num_half), 1e-6)
        if abs(num_full - num_half) > 1e-3 * scale_n + 1e-9:
            skipped += 1
            continue
        analytic = float(grads[coord])
        scale = max(abs(analytic), abs(num_half), 1e-5)
        worst = max(worst, abs(analytic - num_half) / scale)
        checked += 1
    if skipped:
        log.info("gradient_check: resampled %d kink-crossing coordinates", skipped)
    if checked < min(n_coords, total):
        log.warning("gradient_check: only %d smooth coordinates available", checked)
    return worst


def dataset_fingerprint(plays: list[PlaySequence]) -> int:
    """Stable checksum over play seeds and shapes for checkpoint provenance."""
    acc = 0
    for seq in plays:
        desc = f"{seq.seed}:{seq.positions.shape}:{seq.joints30.shape}".encode()
        acc = zlib.crc32(desc, acc)
    return acc
