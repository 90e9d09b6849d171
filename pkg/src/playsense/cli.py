"""Command-line entry point.

Verbs: ``generate`` writes a synthetic dataset, ``pretrain`` trains one
variant and writes a checkpoint plus loss CSV, ``probe`` scores checkpoints
on the downstream tasks, ``verify`` runs the fast invariant suite. Exit
codes: 0 success, 1 check failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .bench import TASKS, eval_task_curve, extract_embeddings, run_ablation_matrix
from .checkpoint import load_checkpoint, restore_model, save_checkpoint
from .config import (
    ConfigError,
    RunConfig,
    apply_override,
    dump_config,
    load_config,
    validate_variant,
)
from .court import compute_shoulder_normal
from .dataset_io import load_dataset, save_dataset
from .generator import generate_play, sample_plays
from .metrics import average_precision
from .model import PlayModel
from .objectives import WindowConfig, bin_delta, derive_event_windows
from .play import EVENT_NAMES, PlayScript
from .topology import build_topology
from .training import TrainConfig, dataset_fingerprint, pretrain
from .transformer import build_attention_mask

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for override in args.set or []:
        key, _, value = override.partition("=")
        if not value:
            raise ConfigError(f"--set expects key=value, got {override!r}")
        apply_override(cfg, key.strip(), value)
    if getattr(args, "seed", None) is not None:
        cfg.generator.seed = args.seed
        cfg.trainer.seed = args.seed
    cfg.validate()
    return cfg


def cmd_generate(args) -> int:
    cfg = _load_run_config(args)
    topology = build_topology()
    g = cfg.generator
    plays = sample_plays(topology, g.n_plays, g.n_players, g.n_steps,
                         seed=g.seed, mix=g.mix_weights(), noise_scale=g.noise_scale)
    save_dataset(plays, args.output)
    counts = np.zeros(len(EVENT_NAMES), dtype=np.int64)
    for seq in plays:
        counts += seq.events.reshape(-1, len(EVENT_NAMES)).sum(axis=0).astype(np.int64)
    print(f"wrote {len(plays)} plays to {args.output}")
    for name, count in zip(EVENT_NAMES, counts):
        print(f"  events.{name}: {int(count)}")
    return EXIT_OK


def cmd_pretrain(args) -> int:
    cfg = _load_run_config(args)
    validate_variant(args.variant)
    plays = load_dataset(args.dataset)
    if not plays:
        raise ConfigError("dataset is empty")
    model = PlayModel(build_topology(), cfg.encoder_config(), cfg.transformer_config(),
                      variant=args.variant)
    t = cfg.trainer
    train_cfg = TrainConfig(
        learning_rate=t.learning_rate, batch_size=t.batch_size, epochs=t.epochs,
        alpha=cfg.objectives.alpha, seed=t.seed, precision=t.precision,
        permute_players=t.permute_players,
        windows=WindowConfig(cfg.objectives.delta_past_s, cfg.objectives.delta_future_s),
    )
    started = time.time()
    trace = pretrain(plays, model, train_cfg)
    save_checkpoint(args.output, model, step=len(trace.steps),
                    dataset_fingerprint=dataset_fingerprint(plays),
                    extra={"variant": args.variant})
    loss_csv = Path(args.loss_csv) if args.loss_csv else Path(args.output).with_suffix(".losses.csv")
    loss_csv.write_text(trace.to_csv())
    final = trace.epochs[-1]
    print(f"pretrained variant={args.variant} in {time.time() - started:.1f}s; "
          f"final l_total={final[3]:.4f}")
    print(f"checkpoint: {args.output}")
    print(f"loss trace: {loss_csv}")
    return EXIT_OK


def cmd_probe(args) -> int:
    cfg = _load_run_config(args)
    plays = load_dataset(args.dataset)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    task_names = tuple(args.tasks.split(",")) if args.tasks else cfg.probe.tasks
    for name in task_names:
        if name not in TASKS:
            raise ConfigError(f"unknown task {name!r}")

    models = {}
    for path in args.checkpoint:
        if not Path(path).exists():
            print(f"error: checkpoint not found: {path}", file=sys.stderr)
            return EXIT_USAGE
        ckpt = load_checkpoint(path)
        models[ckpt.variant] = restore_model(ckpt)

    seeds = cfg.probe.seeds
    if len(models) == 1:
        variant, model = next(iter(models.items()))
        table = extract_embeddings(model, plays)
        for name in task_names:
            task = TASKS[name]
            rows = ["horizon_s,ap"]
            for horizon in task.horizons:
                results = eval_task_curve(table, plays, task, (horizon,),
                                          seed=seeds[0],
                                          eval_fraction=cfg.probe.eval_fraction)
                res = results[horizon]
                rows.append(f"{horizon:g},{res.ap:.4f}")
                pr = out_dir / f"{variant}_{name}_{horizon:g}s_pr.csv"
                pr.write_text("recall,precision\n" + "\n".join(
                    f"{r:.6f},{p:.6f}" for r, p in zip(res.recall, res.precision)) + "\n")
            (out_dir / f"{variant}_{name}_ap.csv").write_text("\n".join(rows) + "\n")
            print(f"{variant} {name}: wrote AP curve over {len(task.horizons)} horizons")
    else:
        report = run_ablation_matrix(models, plays, tasks=task_names, seeds=seeds,
                                     eval_fraction=cfg.probe.eval_fraction)
        (out_dir / "ablation.csv").write_text(report.to_csv())
        table_text = report.format_table()
        (out_dir / "ablation.txt").write_text(table_text + "\n")
        print(table_text)
    return EXIT_OK


# ----------------------------------------------------------------------
# verify: fast self-contained invariant checks
# ----------------------------------------------------------------------

def _interpret_mask_rules(t_eff: int, n: int) -> np.ndarray:
    """Literal reading of the three attention rules, row pair by row pair."""
    from .transformer import RowIndex

    index = RowIndex(t_eff=t_eff, n_players=n)
    rows = list(index.rows())
    allowed = np.zeros((index.n_rows, index.n_rows), dtype=bool)
    for flat_q, kind_q, t_q, i_q in rows:
        for flat_k, kind_k, t_k, j_k in rows:
            if kind_q == "start":
                ok = kind_k == "start"
            elif kind_q == "state":
                if kind_k == "start":
                    ok = True
                elif kind_k == "state":
                    ok = t_k < t_q or (t_k == t_q and j_k <= i_q)
                else:
                    ok = t_k < t_q or (t_k == t_q and j_k < i_q)
            else:
                if kind_k == "start":
                    ok = True
                else:
                    ok = t_k < t_q or (t_k == t_q and j_k <= i_q)
            allowed[flat_q, flat_k] = ok
    return allowed


def _check_mask_oracle(fault: str | None) -> tuple[bool, str]:
    for t_eff in range(1, 4):
        for n in range(1, 4):
            mask, index = build_attention_mask(t_eff, n)
            if fault == "mask_rule":
                mask = mask.copy()
                q = index.state(0, 0)
                k = index.lookahead(0, 0)
                mask[q, k] = ~mask[q, k]
            expected = _interpret_mask_rules(t_eff, n)
            if not np.array_equal(mask, expected):
                return False, f"mask mismatch at t_eff={t_eff} n={n}"
    return True, "mask equals the rule interpreter for t_eff<=3, n<=3"


def _check_shoulder_normal(_) -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    for _ in range(50):
        u_l, u_r = rng.normal(0, 10, 2), rng.normal(0, 10, 2)
        if np.linalg.norm(u_r - u_l) < 1e-3:
            continue
        n = compute_shoulder_normal(u_l, u_r)
        if abs(np.linalg.norm(n) - 1) > 1e-9 or abs(n @ (u_r - u_l)) > 1e-9:
            return False, "normal not unit or not orthogonal"
        theta = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        rotated = compute_shoulder_normal(rot @ u_l, rot @ u_r)
        if np.abs(rot @ n - rotated).max() > 1e-6:
            return False, "normal not rotation-equivariant"
    return True, "normals unit, orthogonal and rotation-equivariant"


def _check_event_windows(_) -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    for _ in range(20):
        events = (rng.random((30, 2, 9)) < 0.05).astype(np.uint8)
        cfg = WindowConfig(delta_past_s=0.4, delta_future_s=0.4)
        got = derive_event_windows(events, cfg)
        t_total = events.shape[0]
        for t in range(t_total):
            for i in range(2):
                for e in range(9):
                    past = max(events[max(0, t - 2) : t, i, e].max(initial=0), 0)
                    future = max(events[t + 1 : min(t_total, t + 3), i, e].max(initial=0), 0)
                    if (got[t, i, e, 0] != past or got[t, i, e, 1] != events[t, i, e]
                            or got[t, i, e, 2] != future):
                        return False, f"window mismatch at t={t}"
    return True, "event windows match the brute-force double loop"


def _check_average_precision(_) -> tuple[bool, str]:
    rng = np.random.default_rng(13)
    for _ in range(200):
        m = rng.integers(2, 15)
        labels = rng.integers(0, 2, m)
        if labels.sum() == 0:
            labels[rng.integers(m)] = 1
        scores = rng.normal(0, 1, m)
        got = average_precision(scores, labels)
        order = np.argsort(-scores, kind="stable")
        hits, total, expect = 0, 0.0, 0
        for rank, idx in enumerate(order, start=1):
            if labels[idx]:
                hits += 1
                total += hits / rank
        expect = total / labels.sum()
        if abs(got - expect) > 1e-12:
            return False, "AP mismatch vs enumeration"
    return True, "average precision matches threshold enumeration"


def _check_binning(_) -> tuple[bool, str]:
    cases = [((0.0, 0.0), 60), ((-5.5, -5.5), 0), ((9.0, 0.0), 115)]
    for delta, expected in cases:
        if bin_delta(np.array(delta)) != expected:
            return False, f"bin_delta{delta} != {expected}"
    return True, "step binning matches the documented cells"


def _check_generator_roundtrip(_) -> tuple[bool, str]:
    import tempfile

    topology = build_topology()
    script = PlayScript(kind="iso_shot", actors={"shooter": 0}, event_frame=16,
                        shot_type="jumpshot", margin=8)
    a = generate_play(script, topology, 2, 32, seed=5)
    b = generate_play(script, topology, 2, 32, seed=5)
    if not np.array_equal(a.joints30, b.joints30):
        return False, "generator is not deterministic"
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "plays.bin"
        save_dataset([a], path)
        loaded = load_dataset(path)[0]
        if not np.array_equal(loaded.joints30, a.joints30):
            return False, "dataset round trip altered joints"
    return True, "generator deterministic; dataset round trip bit-exact"


def _check_downsampling(_) -> tuple[bool, str]:
    import torch

    from .encoder import EncoderConfig as EC

    topology = build_topology()
    enc = PlayModel(topology,
                    EC(block_widths=(4, 4), kernel_sizes=(3, 3), strides=(2, 3),
                       embed_dim=8),
                    variant="full").encoder
    enc.eval().double()
    x = torch.randn(1, 60, topology.n_joints, 3, dtype=torch.float64)
    with torch.no_grad():
        out = enc(x)
    if out.shape[1] != 10:
        return False, f"60 frames produced {out.shape[1]} embeddings, expected 10"
    return True, "30 Hz to 5 Hz downsampling ratio is exactly 6"


VERIFY_CHECKS = [
    ("mask_oracle", _check_mask_oracle),
    ("shoulder_normal", _check_shoulder_normal),
    ("event_windows", _check_event_windows),
    ("average_precision", _check_average_precision),
    ("trajectory_binning", _check_binning),
    ("generator_roundtrip", _check_generator_roundtrip),
    ("downsampling", _check_downsampling),
]


def cmd_verify(args) -> int:
    if args.export_mask:
        mask, index = build_attention_mask(args.mask_teff, args.mask_n)
        packed = np.packbits(mask, axis=None)
        header = np.array([index.n_rows], dtype=np.int64)
        with open(args.export_mask, "wb") as fh:
            fh.write(header.tobytes())
            fh.write(packed.tobytes())
        print(f"exported {index.n_rows}x{index.n_rows} mask to {args.export_mask}")

    failures = 0
    for name, check in VERIFY_CHECKS:
        started = time.time()
        ok, detail = check(args.inject_fault)
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        print(f"[{status}] {name}: {detail} ({time.time() - started:.2f}s)")
    if failures:
        print(f"{failures} check(s) failed")
        return EXIT_CHECK_FAILED
    print("all checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="playsense",
                                     description="synthetic play analytics pipeline")
    parser.add_argument("--dump-defaults", action="store_true",
                        help="print the default configuration and exit")
    sub = parser.add_subparsers(dest="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a section.key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config entry")
    common.add_argument("--seed", type=int, help="override generator and trainer seeds")

    p = sub.add_parser("generate", parents=[common], help="write a synthetic dataset")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pretrain", parents=[common], help="pretrain one variant")
    p.add_argument("--dataset", required=True)
    p.add_argument("--output", required=True, help="checkpoint path")
    p.add_argument("--variant", default="full")
    p.add_argument("--loss-csv", help="loss trace path (default: alongside checkpoint)")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("probe", parents=[common], help="linear-probe checkpoints")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", action="append", required=True)
    p.add_argument("--output", required=True, help="report directory")
    p.add_argument("--tasks", help="comma-separated task subset")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    p.add_argument("--inject-fault", choices=["mask_rule"],
                   help="corrupt one rule to prove the checks can fail")
    p.add_argument("--export-mask", help="write a bit-packed attention mask")
    p.add_argument("--mask-teff", type=int, default=4)
    p.add_argument("--mask-n", type=int, default=3)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_defaults:
        print(dump_config(), end="")
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
