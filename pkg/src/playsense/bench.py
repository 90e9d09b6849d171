"""Downstream probing benchmark.

Protocol: freeze a pretrained model, extract its state-row embeddings at
every (play, step, player), anchor task labels at event frames, sample the
embedding a fixed horizon before each anchor, and fit a linear probe on a
play-disjoint training split. Average precision on the held-out plays is
the reported score.

Per-player tasks (shot taker) contrast players at the same anchor; per-play
tasks pool the player embeddings at the sampled step. Shot location and
shot type read the shooter's own row since the anchor names a shooter.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from .labelers import assist_chains, label_picks
from .metrics import average_precision, pr_curve
from .model import PlayModel
from .objectives import WindowConfig
from .play import PlaySequence, SHOT_TYPES, STEP_RATE_HZ
from .probe import LinearProbe
from .training import build_batch, play_arrays

log = logging.getLogger(__name__)

PER_PLAYER = "per_player"
PER_PLAY = "per_play"


@dataclass(frozen=True)
class ProbeTask:
    name: str
    granularity: str
    horizons: tuple[float, ...]  # seconds before the anchor, descending
    n_classes: int = 2

    def __post_init__(self):
        if list(self.horizons) != sorted(self.horizons, reverse=True):
            raise ValueError("horizons must be sorted descending")
        if any(h < 0 for h in self.horizons):
            raise ValueError("horizons must be non-negative")


TASKS = {
    t.name: t
    for t in (
        ProbeTask("shot_taker", PER_PLAYER, (2.8, 2.0, 1.6, 0.8)),
        ProbeTask("pick", PER_PLAY, (1.4, 1.0, 0.6, 0.2, 0.0)),
        ProbeTask("assist", PER_PLAY, (2.8, 2.0, 1.6, 0.8)),
        ProbeTask("shot_location", PER_PLAY, (1.6, 1.2, 0.8, 0.4)),
        ProbeTask("shot_type", PER_PLAY, (1.6, 1.2, 0.8, 0.4), n_classes=4),
    )
}


def get_task(name: str) -> ProbeTask:
    try:
        return TASKS[name]
    except KeyError:
        raise ValueError(f"unknown task {name!r}; available: {', '.join(sorted(TASKS))}") from None


@dataclass
class EmbeddingTable:
    """State-row embeddings for every (play, usable step, player)."""

    embeddings: np.ndarray  # (n_plays, t_eff, n_players, width)

    @property
    def n_plays(self) -> int:
        return self.embeddings.shape[0]

    @property
    def t_eff(self) -> int:
        return self.embeddings.shape[1]


def extract_embeddings(model: PlayModel, plays: list[PlaySequence],
                       chunk_size: int = 16) -> EmbeddingTable:
    """Teacher-forced forward over all plays; rows keyed positionally."""
    if not plays:
        raise ValueError("no plays to embed")
    model.eval()
    windows = WindowConfig()
    out = []
    with torch.no_grad():
        for lo in range(0, len(plays), chunk_size):
            chunk = plays[lo : lo + chunk_size]
            arrays = [play_arrays(p, model.topology, windows) for p in chunk]
            batch = build_batch(arrays, model.dtype)
            outputs = model(batch.positions, batch.joints30, batch.normals,
                            batch.player_ids)
            out.append(outputs.zhat.to(torch.float64).numpy())
    return EmbeddingTable(embeddings=np.concatenate(out, axis=0))


@dataclass(frozen=True)
class Anchor:
    """One labeled anchor: event frame, class label, optional player row."""

    play: int
    frame: int
    label: int
    player: int | None = None  # None pools all players


def task_anchors(task: ProbeTask, play_idx: int, seq: PlaySequence) -> list[Anchor]:
    shots = seq.ball.shots if seq.ball is not None else []
    if task.name == "shot_taker":
        return [
            Anchor(play_idx, s.frame, int(i == s.shooter), player=i)
            for s in shots
            for i in range(seq.n_players)
        ]
    if task.name == "pick":
        labels = label_picks(seq)
        hits = np.flatnonzero(labels)
        if len(hits):
            return [Anchor(play_idx, int(hits[0]), 1)]
        return [Anchor(play_idx, int(seq.meta.get("anchor_frame", seq.n_steps // 2)), 0)]
    if task.name == "assist":
        if not shots:
            return []
        chains = assist_chains(seq)
        if chains:
            return [Anchor(play_idx, chains[0].shot_frame, 1)]
        return [Anchor(play_idx, shots[0].frame, 0)]
    if task.name == "shot_location":
        return [Anchor(play_idx, s.frame, int(s.three_point), player=s.shooter)
                for s in shots]
    if task.name == "shot_type":
        return [Anchor(play_idx, s.frame, SHOT_TYPES.index(s.shot_type), player=s.shooter)
                for s in shots]
    raise ValueError(f"unknown task {task.name!r}")


@dataclass
class ProbeDataset:
    X: np.ndarray
    y: np.ndarray
    play_ids: np.ndarray
    horizon_s: float
    skipped: int = 0


def build_probe_dataset(
    table: EmbeddingTable,
    plays: list[PlaySequence],
    task: ProbeTask,
    horizon_s: float,
    play_ids: np.ndarray | None = None,
) -> ProbeDataset:
    """Sample embeddings ``horizon_s`` seconds before each anchor.

    Anchors whose sample step falls before the sequence start (or past the
    last usable step) are skipped and counted.
    """
    steps_f = horizon_s * STEP_RATE_HZ
    steps = round(steps_f)
    if abs(steps_f - steps) > 1e-9:
        raise ValueError(f"horizon {horizon_s}s is not a whole number of 5 Hz steps")
    chosen = range(len(plays)) if play_ids is None else play_ids
    rows_x, rows_y, rows_play = [], [], []
    skipped = 0
    for k in chosen:
        for anchor in task_anchors(task, int(k), plays[int(k)]):
            t_sample = anchor.frame - steps
            if not 0 <= t_sample < table.t_eff:
                skipped += 1
                continue
            if anchor.player is None:
                emb = table.embeddings[anchor.play, t_sample].mean(axis=0)
            else:
                emb = table.embeddings[anchor.play, t_sample, anchor.player]
            rows_x.append(emb)
            rows_y.append(anchor.label)
            rows_play.append(anchor.play)
    if skipped:
        log.warning("task %s at %.1fs: skipped %d anchors without enough history",
                    task.name, horizon_s, skipped)
    if not rows_x:
        width = table.embeddings.shape[-1]
        return ProbeDataset(np.zeros((0, width)), np.zeros(0, dtype=int),
                            np.zeros(0, dtype=int), horizon_s, skipped)
    return ProbeDataset(np.stack(rows_x), np.asarray(rows_y), np.asarray(rows_play),
                        horizon_s, skipped)


def split_play_ids(n_plays: int, eval_fraction: float, seed: int):
    """Disjoint (train, eval) play-index arrays, seeded."""
    if not 0.0 < eval_fraction < 1.0:
        raise ValueError("eval_fraction must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(n_plays)
    n_eval = max(1, int(round(eval_fraction * n_plays)))
    eval_ids = np.sort(order[:n_eval])
    train_ids = np.sort(order[n_eval:])
    assert not set(train_ids) & set(eval_ids)
    return train_ids, eval_ids


def probe_scores(probe: LinearProbe, X: np.ndarray, n_classes: int) -> np.ndarray:
    if n_classes == 2:
        return probe.decision_function(X)
    return probe.predict_proba(X)


def task_ap(scores: np.ndarray, y: np.ndarray, n_classes: int) -> float:
    """Binary AP, or the macro mean of one-vs-rest APs for multi-class."""
    if n_classes == 2:
        return average_precision(scores, y)
    per_class = []
    for c in range(scores.shape[1]):
        labels = (y == c).astype(int)
        if labels.sum() == 0:
            continue
        per_class.append(average_precision(scores[:, c], labels))
    if not per_class:
        raise ValueError("no class has positives in the evaluation split")
    return float(np.mean(per_class))


@dataclass
class HorizonResult:
    horizon_s: float
    ap: float
    recall: np.ndarray
    precision: np.ndarray
    n_train: int
    n_eval: int
    skipped: int


def eval_task_curve(
    model_or_table: PlayModel | EmbeddingTable,
    plays: list[PlaySequence],
    task: ProbeTask | str,
    horizons: tuple[float, ...] | None = None,
    seed: int = 0,
    eval_fraction: float = 0.4,
    probe_max_iter: int = 4000,
) -> dict[float, HorizonResult]:
    """Fit a probe per horizon on the train split, report AP + PR on eval."""
    task = get_task(task) if isinstance(task, str) else task
    horizons = horizons if horizons is not None else task.horizons
    table = (model_or_table if isinstance(model_or_table, EmbeddingTable)
             else extract_embeddings(model_or_table, plays))
    train_ids, eval_ids = split_play_ids(len(plays), eval_fraction, seed)

    results = {}
    for horizon in horizons:
        train = build_probe_dataset(table, plays, task, horizon, train_ids)
        evald = build_probe_dataset(table, plays, task, horizon, eval_ids)
        if not set(train.play_ids).isdisjoint(evald.play_ids):
            raise AssertionError("probe train and eval splits share a play")
        probe = LinearProbe(seed=seed, max_iter=probe_max_iter).fit(train.X, train.y)
        scores = probe_scores(probe, evald.X, task.n_classes)
        ap = task_ap(scores, evald.y, task.n_classes)
        if task.n_classes == 2:
            recall, precision = pr_curve(scores, evald.y)
        else:
            flat_scores = np.concatenate([scores[:, c] for c in range(scores.shape[1])])
            flat_labels = np.concatenate([(evald.y == c).astype(int)
                                          for c in range(scores.shape[1])])
            recall, precision = pr_curve(flat_scores, flat_labels)
        results[horizon] = HorizonResult(horizon, ap, recall, precision,
                                         len(train.y), len(evald.y),
                                         train.skipped + evald.skipped)
    return results


def data_efficiency_sweep(
    model_or_table: PlayModel | EmbeddingTable,
    plays: list[PlaySequence],
    task: ProbeTask | str,
    fractions: tuple[float, ...] = (1.0, 0.5, 0.25, 0.125),
    horizon_s: float | None = None,
    seeds: tuple[int, ...] = (0, 1, 2),
    eval_fraction: float = 0.4,
) -> dict[float, tuple[float, float]]:
    """AP as probe-train plays shrink; returns fraction -> (mean, spread).

    Fractions too small to contain both classes are skipped with a warning.
    Fraction 1.0 reuses the untouched training split, so it reproduces
    :func:`eval_task_curve` for the same seed exactly.
    """
    task = get_task(task) if isinstance(task, str) else task
    horizon = task.horizons[-1] if horizon_s is None else horizon_s
    table = (model_or_table if isinstance(model_or_table, EmbeddingTable)
             else extract_embeddings(model_or_table, plays))

    results: dict[float, tuple[float, float]] = {}
    for fraction in fractions:
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f"fraction {fraction} outside (0, 1]")
        aps = []
        for seed in seeds:
            train_ids, eval_ids = split_play_ids(len(plays), eval_fraction, seed)
            if fraction < 1.0:
                keep = max(1, int(round(fraction * len(train_ids))))
                order = np.random.default_rng(seed + 1000).permutation(len(train_ids))
                train_sub = np.sort(train_ids[order[:keep]])
            else:
                train_sub = train_ids
            train = build_probe_dataset(table, plays, task, horizon, train_sub)
            evald = build_probe_dataset(table, plays, task, horizon, eval_ids)
            if len(np.unique(train.y)) < 2:
                log.warning("fraction %.3f seed %d: single-class train split, skipped",
                            fraction, seed)
                continue
            probe = LinearProbe(seed=seed).fit(train.X, train.y)
            aps.append(task_ap(probe_scores(probe, evald.X, task.n_classes),
                               evald.y, task.n_classes))
        if aps:
            results[fraction] = (float(np.mean(aps)), float(np.max(aps) - np.min(aps)))
    return results


@dataclass
class AblationReport:
    """AP per (variant, task, horizon) with seed statistics."""

    cells: dict[tuple[str, str, float], tuple[float, float]]
    variants: list[str]
    columns: list[tuple[str, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["variant", "task", "horizon_s", "ap_mean", "ap_spread"])
        for (variant, task, horizon), (mean, spread) in sorted(self.cells.items()):
            writer.writerow([variant, task, f"{horizon:g}", f"{mean:.4f}", f"{spread:.4f}"])
        return buf.getvalue()

    def format_table(self) -> str:
        """Plain-text grid; the best cell per column is starred."""
        headers = ["variant"] + [f"{task}@{h:g}s" for task, h in self.columns]
        lines = ["  ".join(f"{h:>18}" for h in headers)]
        best = {
            col: max(self.cells[(v, *col)][0] for v in self.variants
                     if (v, *col) in self.cells)
            for col in self.columns
        }
        for variant in self.variants:
            cells = [f"{variant:>18}"]
            for col in self.columns:
                if (variant, *col) not in self.cells:
                    cells.append(f"{'-':>18}")
                    continue
                mean, _ = self.cells[(variant, *col)]
                mark = "*" if abs(mean - best[col]) < 1e-12 else " "
                cells.append(f"{mean:.3f}{mark:>14}")
            lines.append("  ".join(cells))
        return "\n".join(lines)


def run_ablation_matrix(
    models: dict[str, PlayModel],
    plays: list[PlaySequence],
    tasks: tuple[str, ...] | None = None,
    horizons: dict[str, tuple[float, ...]] | None = None,
    seeds: tuple[int, ...] = (0,),
    eval_fraction: float = 0.4,
) -> AblationReport:
    """Score every (variant, task, horizon) cell with the same splits."""
    if not models:
        raise ValueError("no variant models supplied")
    task_names = tasks if tasks is not None else tuple(sorted(TASKS))
    missing = [name for name, model in models.items() if model is None]
    if missing:
        raise ValueError(f"missing checkpoints for variants: {', '.join(missing)}")

    columns = []
    for name in task_names:
        task = get_task(name)
        hs = (horizons or {}).get(name, (task.horizons[0], task.horizons[-1]))
        columns.extend((name, h) for h in hs)

    cells = {}
    for variant, model in models.items():
        table = extract_embeddings(model, plays)
        for name in task_names:
            task = get_task(name)
            hs = (horizons or {}).get(name, (task.horizons[0], task.horizons[-1]))
            per_seed = {h: [] for h in hs}
            for seed in seeds:
                results = eval_task_curve(table, plays, task, tuple(hs),
                                          seed=seed, eval_fraction=eval_fraction)
                for h in hs:
                    per_seed[h].append(results[h].ap)
            for h in hs:
                aps = per_seed[h]
                cells[(variant, name, h)] = (float(np.mean(aps)),
                                             float(np.max(aps) - np.min(aps)))
    return AblationReport(cells=cells, variants=list(models), columns=columns)
