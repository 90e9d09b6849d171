"""Full two-stage model: skeleton encoder feeding the masked transformer.

Ablation variants zero the pose and/or torso-normal channels at feature
assembly and/or drop the event objective; the row layout and mask are
identical across variants so probes always see the same embedding geometry.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import torch
from torch import nn

from .encoder import EncoderConfig, PoseEncoder
from .topology import SkeletonTopology, build_topology
from .transformer import (
    EventHeads,
    FeatureAssembler,
    FeatureBundle,
    MaskedTransformer,
    TrajectoryHead,
    extract_state_rows,
)


@dataclass(frozen=True)
class TransformerConfig:
    n_layers: int = 2
    n_heads: int = 4
    width: int = 64
    id_dim: int = 16
    n_player_ids: int = 16
    max_timesteps: int = 64

    def __post_init__(self):
        if self.width % self.n_heads != 0:
            raise ValueError("width must be divisible by n_heads")


@dataclass(frozen=True)
class Variant:
    """Which input channels and objectives a model variant uses."""

    name: str
    use_pose: bool = True
    use_shoulder: bool = True
    use_events: bool = True


VARIANTS = {
    v.name: v
    for v in (
        Variant("full"),
        Variant("no_gnn", use_pose=False),
        Variant("no_shoulder", use_shoulder=False),
        Variant("no_events", use_events=False),
        Variant("no_gnn_no_events", use_pose=False, use_events=False),
        Variant("no_shoulder_no_events", use_shoulder=False, use_events=False),
        Variant("position_only", use_pose=False, use_shoulder=False),
    )
}


def get_variant(name: str) -> Variant:
    try:
        return VARIANTS[name]
    except KeyError:
        raise ValueError(
            f"unknown variant {name!r}; available: {', '.join(sorted(VARIANTS))}"
        ) from None


@dataclass
class ModelOutputs:
    zhat: torch.Tensor  # (B, t_eff, N, width) state-row embeddings
    traj_probs: torch.Tensor  # (B, t_eff, N, 121)
    event_probs: torch.Tensor  # (B, t_eff, N, 9, 3)
    bundle: FeatureBundle = field(repr=False, default=None)


class PlayModel(nn.Module):
    """Skeleton encoder + feature assembler + masked transformer + heads."""

    def __init__(
        self,
        topology: SkeletonTopology | None = None,
        encoder_config: EncoderConfig = EncoderConfig(),
        transformer_config: TransformerConfig = TransformerConfig(),
        variant: str | Variant = "full",
    ):
        super().__init__()
        self.topology = topology if topology is not None else build_topology()
        self.encoder_config = encoder_config
        self.transformer_config = transformer_config
        self.variant = variant if isinstance(variant, Variant) else get_variant(variant)

        self.encoder = PoseEncoder(self.topology, encoder_config)
        self.assembler = FeatureAssembler(
            pose_dim=encoder_config.embed_dim,
            width=transformer_config.width,
            id_dim=transformer_config.id_dim,
            n_player_ids=transformer_config.n_player_ids,
            max_timesteps=transformer_config.max_timesteps,
        )
        self.transformer = MaskedTransformer(
            transformer_config.width, transformer_config.n_heads,
            transformer_config.n_layers,
        )
        self.traj_head = TrajectoryHead(transformer_config.width)
        self.event_heads = EventHeads(transformer_config.width)

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def pose_embeddings(self, joints30: torch.Tensor) -> torch.Tensor:
        """(B, 6T, N, J, 3) -> (B, T, N, embed_dim); zeros for no-pose variants."""
        b, frames, n, j, _ = joints30.shape
        t = frames // 6
        if not self.variant.use_pose:
            return torch.zeros(b, t, n, self.encoder_config.embed_dim,
                               dtype=joints30.dtype, device=joints30.device)
        per_player = joints30.permute(0, 2, 1, 3, 4).reshape(b * n, frames, j, 3)
        encoded = self.encoder(per_player)  # (B * N, T, d)
        return encoded.reshape(b, n, t, -1).permute(0, 2, 1, 3)

    def assemble(self, positions, joints30, normals, player_ids) -> FeatureBundle:
        pose = self.pose_embeddings(joints30)
        if not self.variant.use_shoulder:
            normals = torch.zeros_like(normals)
        return self.assembler(positions, pose, normals, player_ids)

    def forward(self, positions, joints30, normals, player_ids) -> ModelOutputs:
        bundle = self.assemble(positions, joints30, normals, player_ids)
        outputs = self.transformer(bundle.rows, bundle.mask)
        zhat = extract_state_rows(outputs, bundle.index)
        return ModelOutputs(
            zhat=zhat,
            traj_probs=self.traj_head(zhat),
            event_probs=self.event_heads(zhat),
            bundle=bundle,
        )


def seed_parameters(model: nn.Module, seed: int) -> None:
    """Deterministic per-tensor initialization keyed by parameter name.

    Each tensor gets its own generator stream, so adding or removing sibling
    modules never shifts another module's draw.
    """
    for name, param in model.named_parameters():
        gen = torch.Generator()
        gen.manual_seed((seed * 0x9E3779B1 + zlib.crc32(name.encode())) % 2**63)
        with torch.no_grad():
            if param.ndim >= 2:
                fan_in = param.shape[1] * (param.shape[2] if param.ndim > 2 else 1)
                bound = (1.0 / fan_in) ** 0.5
                param.uniform_(-bound, bound, generator=gen)
            elif "bias" in name:
                param.zero_()
            elif name.endswith("start_embed"):
                param.normal_(0.0, 0.02, generator=gen)
            elif "norm" in name or "bn" in name.lower():
                param.fill_(1.0)
            else:
                param.normal_(0.0, 0.02, generator=gen)
    for name, buf in model.named_buffers():
        if name.endswith("running_mean"):
            buf.zero_()
        elif name.endswith("running_var"):
            buf.fill_(1.0)


def zero_heads(model: PlayModel) -> None:
    """Zero the projection heads; useful as the uniform-prediction reference."""
    with torch.no_grad():
        for module in (model.traj_head.proj, model.event_heads.past,
                       model.event_heads.current, model.event_heads.future):
            module.weight.zero_()
            module.bias.zero_()
