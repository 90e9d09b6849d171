"""Checkpoint container: named tensors plus config and optimizer state.

Tensors are stored raw in their native dtype so a save/load/forward round
trip is bit-exact at equal precision. Every section carries a checksum, so
tampering or truncation surfaces as a :class:`ContainerError` on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch

from .container import ContainerError, read_container, write_container
from .encoder import EncoderConfig
from .model import PlayModel, TransformerConfig, get_variant
from .topology import build_topology

CHECKPOINT_MAGIC = b"PSCKPT01"


@dataclass
class Checkpoint:
    """Deserialized checkpoint contents."""

    variant: str
    topology_preset: str
    encoder_config: EncoderConfig
    transformer_config: TransformerConfig
    precision: str
    step: int
    dataset_fingerprint: int
    model_state: dict[str, torch.Tensor]
    optimizer_state: dict[str, torch.Tensor]
    extra: dict


def save_checkpoint(
    path,
    model: PlayModel,
    step: int = 0,
    dataset_fingerprint: int = 0,
    optimizer: torch.optim.Optimizer | None = None,
    topology_preset: str = "default17",
    extra: dict | None = None,
) -> None:
    precision = "float64" if model.dtype == torch.float64 else "float32"
    head = {
        "variant": model.variant.name,
        "topology_preset": topology_preset,
        "encoder_config": vars(model.encoder_config) | {
            "block_widths": list(model.encoder_config.block_widths),
            "kernel_sizes": list(model.encoder_config.kernel_sizes),
            "strides": list(model.encoder_config.strides),
        },
        "transformer_config": vars(model.transformer_config),
        "precision": precision,
        "step": step,
        "dataset_fingerprint": dataset_fingerprint,
        "extra": extra or {},
    }
    sections = [("head", json.dumps(head))]
    for name, tensor in model.state_dict().items():
        sections.append((f"model/{name}", tensor.detach().cpu().numpy()))
    if optimizer is not None:
        opt_state = optimizer.state_dict()
        flat: dict[str, np.ndarray] = {}
        meta = {"param_groups": opt_state["param_groups"], "keys": []}
        for pid, state in opt_state["state"].items():
            for key, value in state.items():
                sec = f"opt/{pid}/{key}"
                meta["keys"].append([pid, key, torch.is_tensor(value)])
                flat[sec] = (value.detach().cpu().numpy() if torch.is_tensor(value)
                             else np.asarray(value, dtype=np.float64))
        sections.append(("opt_meta", json.dumps(meta)))
        sections.extend(flat.items())
    write_container(path, CHECKPOINT_MAGIC, sections)


def load_checkpoint(path) -> Checkpoint:
    sections = read_container(path, CHECKPOINT_MAGIC)
    if "head" not in sections:
        raise ContainerError(f"{path}: missing checkpoint head")
    head = json.loads(sections["head"])
    enc = head["encoder_config"]
    model_state = {
        name.removeprefix("model/"): torch.as_tensor(value)
        for name, value in sections.items()
        if name.startswith("model/")
    }
    optimizer_state = {
        name: torch.as_tensor(value)
        for name, value in sections.items()
        if name.startswith("opt/")
    }
    return Checkpoint(
        variant=head["variant"],
        topology_preset=head["topology_preset"],
        encoder_config=EncoderConfig(
            block_widths=tuple(enc["block_widths"]),
            kernel_sizes=tuple(enc["kernel_sizes"]),
            strides=tuple(enc["strides"]),
            embed_dim=enc["embed_dim"],
            share_temporal=enc["share_temporal"],
        ),
        transformer_config=TransformerConfig(**head["transformer_config"]),
        precision=head["precision"],
        step=head["step"],
        dataset_fingerprint=head["dataset_fingerprint"],
        model_state=model_state,
        optimizer_state=optimizer_state,
        extra=head.get("extra", {}),
    )


def restore_model(ckpt: Checkpoint) -> PlayModel:
    """Rebuild the exact model a checkpoint was saved from."""
    model = PlayModel(
        topology=build_topology(ckpt.topology_preset),
        encoder_config=ckpt.encoder_config,
        transformer_config=ckpt.transformer_config,
        variant=get_variant(ckpt.variant),
    )
    model.to(torch.float64 if ckpt.precision == "float64" else torch.float32)
    try:
        model.load_state_dict(ckpt.model_state)
    except RuntimeError as exc:
        raise ContainerError(f"checkpoint does not match the model: {exc}") from exc
    model.eval()
    return model


def check_fingerprint(ckpt: Checkpoint, fingerprint: int) -> bool:
    """True when the dataset matches; logs a warning otherwise."""
    if ckpt.dataset_fingerprint != fingerprint:
        import logging

        logging.getLogger(__name__).warning(
            "dataset fingerprint %d does not match checkpoint fingerprint %d",
            fingerprint, ckpt.dataset_fingerprint,
        )
        return False
    return True
