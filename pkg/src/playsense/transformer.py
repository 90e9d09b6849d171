"""Masked multi-player transformer over per-step state and look-ahead rows.

The input matrix stacks, per play: one start row per player, then for each
usable step t a block of state rows (one per player) followed by a block of
look-ahead rows. Look-ahead rows carry each player's next-step position and
deltas; the attention mask decides exactly who may peek at whom:

1. start rows attend to all start rows;
2. a state row (t, i) attends to every start row, to state rows at earlier
   steps or at step t with player index <= i, and to look-ahead rows at
   earlier steps or at step t with player index strictly < i;
3. a look-ahead row (t, i) attends to every start row, and to state and
   look-ahead rows at earlier steps or at step t with player index <= i.

Rule 2's strict inequality is what forces a player's own next move to stay
hidden from its current-state row while still exposing the already-committed
moves of lower-indexed players.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

KIND_START = "start"
KIND_STATE = "state"
KIND_LOOKAHEAD = "lookahead"


@dataclass(frozen=True)
class RowIndex:
    """Bijection between (kind, t, i) descriptors and flat row positions."""

    t_eff: int
    n_players: int

    @property
    def n_rows(self) -> int:
        return self.n_players * (2 * self.t_eff + 1)

    def start(self, i: int) -> int:
        self._check(0, i)
        return i

    def state(self, t: int, i: int) -> int:
        self._check(t, i)
        return self.n_players + 2 * self.n_players * t + i

    def lookahead(self, t: int, i: int) -> int:
        self._check(t, i)
        return self.n_players + 2 * self.n_players * t + self.n_players + i

    def flat(self, kind: str, t: int, i: int) -> int:
        if kind == KIND_START:
            return self.start(i)
        if kind == KIND_STATE:
            return self.state(t, i)
        if kind == KIND_LOOKAHEAD:
            return self.lookahead(t, i)
        raise ValueError(f"unknown row kind {kind!r}")

    def decode(self, flat: int) -> tuple[str, int, int]:
        if not 0 <= flat < self.n_rows:
            raise ValueError(f"row {flat} outside [0, {self.n_rows})")
        if flat < self.n_players:
            return KIND_START, 0, flat
        rest = flat - self.n_players
        t, offset = divmod(rest, 2 * self.n_players)
        if offset < self.n_players:
            return KIND_STATE, t, offset
        return KIND_LOOKAHEAD, t, offset - self.n_players

    def rows(self):
        for flat in range(self.n_rows):
            yield (flat,) + self.decode(flat)

    def _check(self, t: int, i: int):
        if not 0 <= t < max(self.t_eff, 1):
            raise ValueError(f"timestep {t} outside [0, {self.t_eff})")
        if not 0 <= i < self.n_players:
            raise ValueError(f"player {i} outside [0, {self.n_players})")


def build_attention_mask(t_eff: int, n_players: int) -> tuple[np.ndarray, RowIndex]:
    """Boolean (rows, rows) matrix, True where the query row may attend."""
    if t_eff < 1 or n_players < 1:
        raise ValueError("t_eff and n_players must be >= 1")
    index = RowIndex(t_eff=t_eff, n_players=n_players)
    n = n_players

    # per-row descriptors in flat order
    kinds = np.zeros(index.n_rows, dtype=np.int64)  # 0 start, 1 state, 2 lookahead
    ts = np.zeros(index.n_rows, dtype=np.int64)
    ps = np.zeros(index.n_rows, dtype=np.int64)
    ps[:n] = np.arange(n)
    for t in range(t_eff):
        base = n + 2 * n * t
        kinds[base : base + n] = 1
        kinds[base + n : base + 2 * n] = 2
        ts[base : base + 2 * n] = t
        ps[base : base + n] = np.arange(n)
        ps[base + n : base + 2 * n] = np.arange(n)

    kq, kk = kinds[:, None], kinds[None, :]
    tq, tk = ts[:, None], ts[None, :]
    pq, pk = ps[:, None], ps[None, :]

    earlier = tk < tq
    same_le = (tk == tq) & (pk <= pq)
    same_lt = (tk == tq) & (pk < pq)

    mask = np.zeros((index.n_rows, index.n_rows), dtype=bool)
    mask |= (kq == 0) & (kk == 0)
    mask |= (kq == 1) & (kk == 0)
    mask |= (kq == 1) & (kk == 1) & (earlier | same_le)
    mask |= (kq == 1) & (kk == 2) & (earlier | same_lt)
    mask |= (kq == 2) & (kk == 0)
    mask |= (kq == 2) & (kk == 1) & (earlier | same_le)
    mask |= (kq == 2) & (kk == 2) & (earlier | same_le)
    return mask, index


class Mlp(nn.Module):
    """Two-layer perceptron with a rectifier, hidden width = output width."""

    def __init__(self, d_in: int, d_out: int):
        super().__init__()
        self.fc1 = nn.Linear(d_in, d_out)
        self.fc2 = nn.Linear(d_out, d_out)

    def forward(self, x):
        return self.fc2(F.relu(self.fc1(x)))


@dataclass
class FeatureBundle:
    """Assembled transformer input: rows, mask and the row index."""

    rows: torch.Tensor  # (B, n_rows, width)
    mask: torch.Tensor  # (n_rows, n_rows) bool
    index: RowIndex


class FeatureAssembler(nn.Module):
    """Builds start / state / look-ahead rows from positions and player state.

    Player state per step is (pose embedding, torso normal, position); the
    look-ahead row for step t carries the next-step position plus state and
    position deltas, while keeping the state itself at step t. A learned
    per-step embedding is added to state and look-ahead rows and a dedicated
    embedding to start rows, since the mask alone encodes no absolute time.
    """

    def __init__(self, pose_dim: int, width: int, id_dim: int = 16,
                 n_player_ids: int = 16, max_timesteps: int = 64):
        super().__init__()
        self.pose_dim = pose_dim
        self.width = width
        self.max_timesteps = max_timesteps
        state_dim = pose_dim + 2 + 2  # pose, normal, position
        self.psi = nn.Embedding(n_player_ids, id_dim)
        self.g_state = Mlp(id_dim + 2 + state_dim, width)
        self.g_lookahead = Mlp(id_dim + 2 + state_dim + 2 + state_dim, width)
        self.g_start = Mlp(id_dim + 2 + state_dim, width)
        self.time_embed = nn.Embedding(max_timesteps, width)
        self.start_embed = nn.Parameter(torch.zeros(width))

    def forward(self, positions: torch.Tensor, pose: torch.Tensor,
                normals: torch.Tensor, player_ids: torch.Tensor) -> FeatureBundle:
        """positions (B, T, N, 2), pose (B, T, N, d), normals (B, T, N, 2),
        player_ids (B, N) -> bundle with T - 1 usable steps."""
        b, t_total, n, _ = positions.shape
        if t_total < 2:
            raise ValueError("need at least 2 steps; the last one only feeds look-ahead")
        t_eff = t_total - 1
        if t_eff > self.max_timesteps:
            raise ValueError(f"t_eff={t_eff} exceeds max_timesteps={self.max_timesteps}")
        if int(player_ids.max()) >= self.psi.num_embeddings or int(player_ids.min()) < 0:
            raise ValueError("player id outside the identity-embedding table")

        state = torch.cat([pose, normals, positions], dim=-1)  # (B, T, N, d_s)
        d_pos = positions[:, 1:] - positions[:, :-1]  # (B, T-1, N, 2)
        d_state = state[:, 1:] - state[:, :-1]

        ids = self.psi(player_ids)  # (B, N, id_dim)
        ids_t = ids[:, None].expand(b, t_eff, n, ids.shape[-1])

        z_in = torch.cat([ids_t, positions[:, :-1], state[:, :-1]], dim=-1)
        u_in = torch.cat([ids_t, positions[:, 1:], state[:, :-1], d_pos, d_state], dim=-1)
        r_in = torch.cat([ids, positions[:, 0], state[:, 0]], dim=-1)

        steps = torch.arange(t_eff, device=positions.device)
        time = self.time_embed(steps)[None, :, None, :]  # (1, T-1, 1, width)
        z_rows = self.g_state(z_in) + time
        u_rows = self.g_lookahead(u_in) + time
        r_rows = self.g_start(r_in) + self.start_embed

        interleaved = torch.cat([z_rows, u_rows], dim=2)  # (B, T-1, 2N, width)
        rows = torch.cat([r_rows, interleaved.reshape(b, 2 * t_eff * n, self.width)], dim=1)

        mask_np, index = build_attention_mask(t_eff, n)
        mask = torch.as_tensor(mask_np, device=rows.device)
        return FeatureBundle(rows=rows, mask=mask, index=index)


class SelfAttention(nn.Module):
    def __init__(self, width: int, n_heads: int):
        super().__init__()
        if width % n_heads != 0:
            raise ValueError(f"width {width} not divisible by {n_heads} heads")
        self.n_heads = n_heads
        self.head_dim = width // n_heads
        self.qkv = nn.Linear(width, 3 * width)
        self.out = nn.Linear(width, width)

    def forward(self, x: torch.Tensor, mask_bias: torch.Tensor) -> torch.Tensor:
        b, r, w = x.shape
        qkv = self.qkv(x).reshape(b, r, 3, self.n_heads, self.head_dim)
        q, k, v = (t.contiguous() for t in qkv.permute(2, 0, 3, 1, 4))  # (B, H, R, hd)
        scores = (q @ k.transpose(-1, -2)) / self.head_dim**0.5
        attn = (scores + mask_bias).softmax(dim=-1)
        ctx = (attn @ v).permute(0, 2, 1, 3).reshape(b, r, w)
        return self.out(ctx)


class TransformerLayer(nn.Module):
    """Pre-normalization block: x + attn(norm(x)), then x + ff(norm(x))."""

    def __init__(self, width: int, n_heads: int, ff_mult: int = 4):
        super().__init__()
        self.norm1 = nn.LayerNorm(width)
        self.attn = SelfAttention(width, n_heads)
        self.norm2 = nn.LayerNorm(width)
        self.ff = nn.Sequential(
            nn.Linear(width, ff_mult * width),
            nn.ReLU(),
            nn.Linear(ff_mult * width, width),
        )

    def forward(self, x, mask_bias):
        x = x + self.attn(self.norm1(x), mask_bias)
        return x + self.ff(self.norm2(x))


class MaskedTransformer(nn.Module):
    def __init__(self, width: int, n_heads: int, n_layers: int):
        super().__init__()
        self.layers = nn.ModuleList(
            TransformerLayer(width, n_heads) for _ in range(n_layers)
        )

    def forward(self, rows: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        # disallowed pairs get -inf before the softmax, i.e. exactly zero weight
        bias = torch.zeros(mask.shape, dtype=rows.dtype, device=rows.device)
        bias.masked_fill_(~mask, float("-inf"))
        x = rows
        for layer in self.layers:
            x = layer(x, bias)
        return x


def transformer_forward(bundle: FeatureBundle, model: MaskedTransformer) -> torch.Tensor:
    """Run the masked stack; output has the same (B, rows, width) shape."""
    return model(bundle.rows, bundle.mask)


def extract_state_rows(outputs: torch.Tensor, index: RowIndex) -> torch.Tensor:
    """Gather state-row outputs into (B, t_eff, N, width)."""
    n = index.n_players
    body = outputs[:, n:]
    b = outputs.shape[0]
    blocks = body.reshape(b, index.t_eff, 2, n, outputs.shape[-1])
    return blocks[:, :, 0]


class EventHeads(nn.Module):
    """Per-region logistic projections from a player embedding to the events."""

    def __init__(self, width: int, n_events: int = 9):
        super().__init__()
        self.past = nn.Linear(width, n_events)
        self.current = nn.Linear(width, n_events)
        self.future = nn.Linear(width, n_events)

    def head(self, region: str) -> nn.Linear:
        try:
            return {"past": self.past, "current": self.current, "future": self.future}[region]
        except KeyError:
            raise ValueError(f"unknown region {region!r}") from None

    def forward(self, zhat: torch.Tensor) -> torch.Tensor:
        """(..., width) -> (..., n_events, 3) probabilities, regions last."""
        stacked = torch.stack(
            [self.past(zhat), self.current(zhat), self.future(zhat)], dim=-1
        )
        return torch.sigmoid(stacked)


def event_projection(zhat: torch.Tensor, region: str, heads: EventHeads) -> torch.Tensor:
    """sigma(W_r zhat + b_r) for one temporal region."""
    return torch.sigmoid(heads.head(region)(zhat))


class TrajectoryHead(nn.Module):
    def __init__(self, width: int, n_bins: int = 121):
        super().__init__()
        self.proj = nn.Linear(width, n_bins)

    def forward(self, zhat: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.proj(zhat), dim=-1)


def trajectory_head(zhat: torch.Tensor, head: TrajectoryHead) -> torch.Tensor:
    """Softmax distribution over the 121 step bins."""
    return head(zhat)
