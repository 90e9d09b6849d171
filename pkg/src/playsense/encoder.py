"""Directed-graph skeleton encoder.

Per 30 Hz frame, a stack of graph blocks updates joint (vertex) and bone
(edge) features by sum-aggregating incident edges and applying fully
connected updates. Between graph blocks, one causal 1D convolution runs over
time on both feature streams, with strides that take the 30 Hz input down to
the 5 Hz step rate. Mean-pooling over joints and edges plus a final linear
layer yields one pose embedding per player per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .play import UPSAMPLE
from .topology import SkeletonTopology


@dataclass(frozen=True)
class EncoderConfig:
    """Widths, kernels and strides for the skeleton encoder blocks."""

    block_widths: tuple[int, ...] = (16, 32, 32, 64, 64)
    kernel_sizes: tuple[int, ...] = (3, 3, 3, 3, 3)
    strides: tuple[int, ...] = (2, 3, 1, 1, 1)
    embed_dim: int = 64
    share_temporal: bool = True

    @property
    def n_blocks(self) -> int:
        return len(self.block_widths)

    def __post_init__(self):
        if not (len(self.block_widths) == len(self.kernel_sizes) == len(self.strides)):
            raise ValueError("block_widths, kernel_sizes and strides must align")
        if any(k < 1 for k in self.kernel_sizes) or any(s < 1 for s in self.strides):
            raise ValueError("kernel sizes and strides must be >= 1")
        if prod(self.strides) != UPSAMPLE:
            raise ValueError(
                f"stride product must be {UPSAMPLE} to map 30 Hz onto 5 Hz, "
                f"got {prod(self.strides)}"
            )


@dataclass
class GraphState:
    """Per-frame vertex and edge features; leading dims are free batch dims."""

    vertex_feats: torch.Tensor  # (..., J, d_v)
    edge_feats: torch.Tensor  # (..., J - 1, d_e)
    layer: int = 0


def init_graph_state(joints_frame, topology: SkeletonTopology) -> GraphState:
    """Layer-0 state: vertices carry joint coordinates, edges carry bones.

    The bone on edge (m -> j) is v(m) - v(j), source minus target.
    """
    v = torch.as_tensor(joints_frame)
    if v.shape[-2] != topology.n_joints or v.shape[-1] != 3:
        raise ValueError(
            f"joints_frame must end in ({topology.n_joints}, 3), got {tuple(v.shape)}"
        )
    if not torch.isfinite(v).all():
        raise ValueError("joints_frame contains non-finite values")
    src = torch.as_tensor(topology.edge_sources)
    tgt = torch.as_tensor(topology.edge_targets)
    bones = v.index_select(-2, src) - v.index_select(-2, tgt)
    return GraphState(vertex_feats=v, edge_feats=bones, layer=0)


def _resolve_joint(topology: SkeletonTopology, joint) -> int:
    if isinstance(joint, str):
        return topology.joint_index[joint]
    return int(joint)


def aggregate_incoming(state: GraphState, topology: SkeletonTopology, joint) -> torch.Tensor:
    """Element-wise sum of edge features over edges pointing into the joint."""
    j = _resolve_joint(topology, joint)
    mask = torch.as_tensor(topology.edge_targets == j)
    return _masked_edge_sum(state.edge_feats, mask)


def aggregate_outgoing(state: GraphState, topology: SkeletonTopology, joint) -> torch.Tensor:
    """Element-wise sum of edge features over edges pointing out of the joint."""
    j = _resolve_joint(topology, joint)
    mask = torch.as_tensor(topology.edge_sources == j)
    return _masked_edge_sum(state.edge_feats, mask)


def _masked_edge_sum(edge_feats: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    if not mask.any():
        return torch.zeros(edge_feats.shape[:-2] + edge_feats.shape[-1:],
                           dtype=edge_feats.dtype, device=edge_feats.device)
    return edge_feats[..., mask, :].sum(dim=-2)


def incidence_matrices(topology: SkeletonTopology) -> tuple[np.ndarray, np.ndarray]:
    """(J, E) one-hot maps selecting incoming / outgoing edges per joint."""
    inc_in = np.zeros((topology.n_joints, topology.n_edges))
    inc_out = np.zeros((topology.n_joints, topology.n_edges))
    for e in range(topology.n_edges):
        inc_in[topology.edge_targets[e], e] = 1.0
        inc_out[topology.edge_sources[e], e] = 1.0
    return inc_in, inc_out


class DgnBlock(nn.Module):
    """One spatial update: vertices first, then edges against updated endpoints."""

    def __init__(self, d_vertex_in: int, d_edge_in: int, d_out: int):
        super().__init__()
        self.vertex_fc = nn.Linear(d_vertex_in + 2 * d_edge_in, d_out)
        self.vertex_bn = nn.BatchNorm1d(d_out)
        self.edge_fc = nn.Linear(d_edge_in + 2 * d_out, d_out)
        self.edge_bn = nn.BatchNorm1d(d_out)

    def forward(self, vertex, edge, inc_in, inc_out, src_idx, tgt_idx):
        agg_in = torch.einsum("...ed,je->...jd", edge, inc_in)
        agg_out = torch.einsum("...ed,je->...jd", edge, inc_out)
        v = self.vertex_fc(torch.cat([vertex, agg_in, agg_out], dim=-1))
        v = F.relu(_apply_norm(self.vertex_bn, v))
        e = self.edge_fc(torch.cat(
            [edge, v.index_select(-2, src_idx), v.index_select(-2, tgt_idx)], dim=-1))
        e = F.relu(_apply_norm(self.edge_bn, e))
        return v, e


def _apply_norm(bn: nn.BatchNorm1d, x: torch.Tensor) -> torch.Tensor:
    flat = x.reshape(-1, x.shape[-1])
    return bn(flat).reshape(x.shape)


def causal_conv(sequence: torch.Tensor, weights: torch.Tensor, bias: torch.Tensor,
                stride: int = 1) -> torch.Tensor:
    """Causal strided temporal convolution with a rectifier.

    ``sequence`` is (L, d_in) or (B, L, d_in); ``weights`` is lag-major
    (K, d_out, d_in) so output step t consumes input steps s*t - k for
    k = 0..K-1, with out-of-range steps reading as zero. Output length is
    ceil(L / s).
    """
    seq = torch.as_tensor(sequence)
    squeeze = seq.ndim == 2
    if squeeze:
        seq = seq[None]
    weights = torch.as_tensor(weights, dtype=seq.dtype)
    bias = torch.as_tensor(bias, dtype=seq.dtype)
    kernel = weights.flip(0).permute(1, 2, 0)  # (d_out, d_in, K)
    x = seq.permute(0, 2, 1)  # (B, d_in, L)
    x = F.pad(x, (weights.shape[0] - 1, 0))
    out = F.relu(F.conv1d(x, kernel, bias, stride=stride))
    out = out.permute(0, 2, 1)
    return out[0] if squeeze else out


class CausalConv(nn.Module):
    """Module wrapper over :func:`causal_conv` with learned parameters."""

    def __init__(self, d_in: int, d_out: int, kernel_size: int, stride: int):
        super().__init__()
        self.kernel_size = kernel_size
        self.stride = stride
        self.conv = nn.Conv1d(d_in, d_out, kernel_size, stride=stride)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (N, d_in, L) -> (N, d_out, ceil(L / stride))
        return F.relu(self.conv(F.pad(x, (self.kernel_size - 1, 0))))

    def lag_weights(self) -> torch.Tensor:
        """Weights in lag-major (K, d_out, d_in) layout."""
        return self.conv.weight.permute(2, 0, 1).flip(0)


class PoseEncoder(nn.Module):
    """Full 30 Hz joints -> 5 Hz pose-embedding pipeline for one player stream."""

    def __init__(self, topology: SkeletonTopology, config: EncoderConfig = EncoderConfig()):
        super().__init__()
        self.topology = topology
        self.config = config
        inc_in, inc_out = incidence_matrices(topology)
        self.register_buffer("inc_in", torch.as_tensor(inc_in))
        self.register_buffer("inc_out", torch.as_tensor(inc_out))
        self.register_buffer("src_idx", torch.as_tensor(topology.edge_sources))
        self.register_buffer("tgt_idx", torch.as_tensor(topology.edge_targets))

        blocks, tconvs = [], []
        d_v, d_e = 3, 3
        for width, kernel, stride in zip(config.block_widths, config.kernel_sizes,
                                         config.strides):
            blocks.append(DgnBlock(d_v, d_e, width))
            if config.share_temporal:
                tconvs.append(CausalConv(width, width, kernel, stride))
            else:
                tconvs.append(nn.ModuleList([CausalConv(width, width, kernel, stride),
                                             CausalConv(width, width, kernel, stride)]))
            d_v = d_e = width
        self.blocks = nn.ModuleList(blocks)
        self.tconvs = nn.ModuleList(tconvs)
        self.head = nn.Linear(2 * config.block_widths[-1], config.embed_dim)

    def forward(self, joints30: torch.Tensor) -> torch.Tensor:
        """(B, 6T, J, 3) joint tracks -> (B, T, embed_dim) pose embeddings."""
        if joints30.ndim != 4:
            raise ValueError(f"expected (B, frames, J, 3), got {tuple(joints30.shape)}")
        if joints30.shape[1] % UPSAMPLE != 0:
            raise ValueError(f"frame count must be a multiple of {UPSAMPLE}")
        state = init_graph_state(joints30, self.topology)
        v, e = state.vertex_feats, state.edge_feats
        inc_in = self.inc_in.to(v.dtype)
        inc_out = self.inc_out.to(v.dtype)
        for block, tconv in zip(self.blocks, self.tconvs):
            v, e = block(v, e, inc_in, inc_out, self.src_idx, self.tgt_idx)
            conv_v, conv_e = (tconv, tconv) if self.config.share_temporal else tconv
            v = _conv_time(conv_v, v)
            e = _conv_time(conv_e, e)
        pooled = torch.cat([v.mean(dim=2), e.mean(dim=2)], dim=-1)
        return self.head(pooled)


def _conv_time(conv: CausalConv, feats: torch.Tensor) -> torch.Tensor:
    # (B, L, K, d) -> conv over L independently per graph element K
    b, length, k, d = feats.shape
    x = feats.permute(0, 2, 3, 1).reshape(b * k, d, length)
    out = conv(x)
    return out.reshape(b, k, out.shape[1], out.shape[2]).permute(0, 3, 1, 2)


def encode_pose_window(joints30, topology: SkeletonTopology, config: EncoderConfig,
                       encoder: PoseEncoder | None = None) -> torch.Tensor:
    """Encode one player's (6T, J, 3) window to a (T, embed_dim) matrix."""
    enc = encoder if encoder is not None else PoseEncoder(topology, config)
    x = torch.as_tensor(joints30, dtype=next(enc.parameters()).dtype)
    if x.ndim != 3:
        raise ValueError(f"expected (frames, J, 3), got {tuple(x.shape)}")
    enc.eval()
    with torch.no_grad():
        return enc(x[None])[0]
