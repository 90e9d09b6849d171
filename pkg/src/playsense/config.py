"""Layered run configuration.

Config files are plain ``section.key = value`` lines (``#`` comments). Every
field has a desk-scale default, printable via ``--dump-defaults``, and the
same ``section.key=value`` strings work as CLI overrides, so an experiment
is fully described by one diffable text file plus its overrides.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

from .bench import TASKS
from .encoder import EncoderConfig
from .model import TransformerConfig, VARIANTS
from .play import STEP_RATE_HZ


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class GeneratorSection:
    n_plays: int = 200
    n_players: int = 4
    n_steps: int = 50
    seed: int = 0
    noise_scale: float = 0.05
    mix: str = "iso_shot:0.4,assist:0.25,pick:0.2,random_motion:0.15"

    def mix_weights(self) -> dict[str, float]:
        out = {}
        for part in self.mix.split(","):
            kind, _, weight = part.partition(":")
            out[kind.strip()] = float(weight)
        return out


@dataclass
class EncoderSection:
    widths: tuple[int, ...] = (16, 32, 32, 64, 64)
    kernels: tuple[int, ...] = (3, 3, 3, 3, 3)
    strides: tuple[int, ...] = (2, 3, 1, 1, 1)
    embed_dim: int = 64
    share_temporal: bool = True


@dataclass
class TransformerSection:
    n_layers: int = 2
    n_heads: int = 4
    width: int = 64
    id_dim: int = 16
    n_player_ids: int = 16
    max_timesteps: int = 64


@dataclass
class ObjectiveSection:
    alpha: float = 0.5
    delta_past_s: float = 2.0
    delta_future_s: float = 2.0


@dataclass
class TrainerSection:
    learning_rate: float = 5e-4
    batch_size: int = 8
    epochs: int = 20
    seed: int = 0
    precision: str = "float32"
    permute_players: bool = True


@dataclass
class ProbeSection:
    tasks: tuple[str, ...] = ("shot_taker", "pick", "assist", "shot_location", "shot_type")
    eval_fraction: float = 0.4
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    fractions: tuple[float, ...] = (1.0, 0.5, 0.25, 0.125)


@dataclass
class RunConfig:
    generator: GeneratorSection = field(default_factory=GeneratorSection)
    encoder: EncoderSection = field(default_factory=EncoderSection)
    transformer: TransformerSection = field(default_factory=TransformerSection)
    objectives: ObjectiveSection = field(default_factory=ObjectiveSection)
    trainer: TrainerSection = field(default_factory=TrainerSection)
    probe: ProbeSection = field(default_factory=ProbeSection)

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            block_widths=self.encoder.widths,
            kernel_sizes=self.encoder.kernels,
            strides=self.encoder.strides,
            embed_dim=self.encoder.embed_dim,
            share_temporal=self.encoder.share_temporal,
        )

    def transformer_config(self) -> TransformerConfig:
        t = self.transformer
        return TransformerConfig(n_layers=t.n_layers, n_heads=t.n_heads, width=t.width,
                                 id_dim=t.id_dim, n_player_ids=t.n_player_ids,
                                 max_timesteps=t.max_timesteps)

    def validate(self):
        try:
            self.encoder_config()
        except ValueError as exc:
            raise ConfigError(f"encoder.strides/widths: {exc}") from exc
        if self.transformer.width % self.transformer.n_heads != 0:
            raise ConfigError("transformer.width: must be divisible by transformer.n_heads")
        if not 0.0 <= self.objectives.alpha <= 1.0:
            raise ConfigError(f"objectives.alpha: {self.objectives.alpha} outside [0, 1]")
        if self.objectives.delta_past_s <= 0 or self.objectives.delta_future_s <= 0:
            raise ConfigError("objectives.delta_past_s/delta_future_s: must be positive")
        if self.trainer.learning_rate <= 0:
            raise ConfigError("trainer.learning_rate: must be positive")
        if self.trainer.precision not in ("float32", "float64"):
            raise ConfigError(f"trainer.precision: unknown {self.trainer.precision!r}")
        if self.generator.n_steps < 2 * 15:
            raise ConfigError("generator.n_steps: too short for scripted label windows")
        if self.transformer.max_timesteps < self.generator.n_steps - 1:
            raise ConfigError("transformer.max_timesteps: smaller than generator.n_steps - 1")
        if self.transformer.n_player_ids < self.generator.n_players:
            raise ConfigError("transformer.n_player_ids: fewer than generator.n_players")
        if not 0.0 < self.probe.eval_fraction < 1.0:
            raise ConfigError("probe.eval_fraction: must be in (0, 1)")
        for name in self.probe.tasks:
            if name not in TASKS:
                raise ConfigError(f"probe.tasks: unknown task {name!r}")
            for h in TASKS[name].horizons:
                if round(h * STEP_RATE_HZ) >= self.generator.n_steps - 1:
                    raise ConfigError(f"probe.tasks: horizon {h}s does not fit "
                                      f"generator.n_steps={self.generator.n_steps}")
        mix = self.generator.mix_weights()
        for kind in mix:
            if kind not in ("iso_shot", "assist", "pick", "random_motion"):
                raise ConfigError(f"generator.mix: unknown script kind {kind!r}")
        if sum(mix.values()) <= 0:
            raise ConfigError("generator.mix: weights must sum to a positive value")
        return self


def validate_variant(name: str):
    if name not in VARIANTS:
        raise ConfigError(f"variant: unknown {name!r}; available: {', '.join(sorted(VARIANTS))}")


def _parse_value(raw: str, reference):
    raw = raw.strip()
    if isinstance(reference, bool):
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if isinstance(reference, int):
        return int(raw)
    if isinstance(reference, float):
        return float(raw)
    if isinstance(reference, tuple):
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        element = reference[0] if reference else ""
        if isinstance(element, int):
            return tuple(int(p) for p in parts)
        if isinstance(element, float):
            return tuple(float(p) for p in parts)
        return tuple(parts)
    return raw


def apply_override(cfg: RunConfig, dotted_key: str, raw_value: str) -> RunConfig:
    section_name, _, key = dotted_key.partition(".")
    if not key:
        raise ConfigError(f"override {dotted_key!r} must look like section.key")
    try:
        section = getattr(cfg, section_name)
    except AttributeError:
        raise ConfigError(f"unknown config section {section_name!r}") from None
    if not hasattr(section, key):
        raise ConfigError(f"unknown config key {dotted_key!r}")
    current = getattr(section, key)
    setattr(section, key, _parse_value(raw_value, current))
    return cfg


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base if base is not None else RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, _, value = stripped.partition("=")
        apply_override(cfg, key.strip(), value)
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig | None = None) -> str:
    cfg = cfg if cfg is not None else RunConfig()
    lines = []
    for section_field in fields(cfg):
        section = getattr(cfg, section_field.name)
        for f in fields(section):
            value = getattr(section, f.name)
            if isinstance(value, tuple):
                rendered = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                rendered = "true" if value else "false"
            else:
                rendered = str(value)
            lines.append(f"{section_field.name}.{f.name} = {rendered}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def copy_config(cfg: RunConfig) -> RunConfig:
    return dataclasses.replace(
        cfg,
        generator=dataclasses.replace(cfg.generator),
        encoder=dataclasses.replace(cfg.encoder),
        transformer=dataclasses.replace(cfg.transformer),
        objectives=dataclasses.replace(cfg.objectives),
        trainer=dataclasses.replace(cfg.trainer),
        probe=dataclasses.replace(cfg.probe),
    )
