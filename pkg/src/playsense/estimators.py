"""Scikit-learn style facade over pretraining and embedding extraction.

``PlayEmbedder`` is the package's front door for composition with the wider
ecosystem: ``fit`` runs the joint pretraining objective over a list of
plays, ``transform`` returns one embedding row per (play, step, player).
The linear probe in :mod:`playsense.probe` is the matching classifier.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bench import extract_embeddings
from .encoder import EncoderConfig
from .model import PlayModel, TransformerConfig, get_variant
from .topology import build_topology
from .training import TrainConfig, pretrain
from .validation import check_play_list


class PlayEmbedder(BaseEstimator, TransformerMixin):
    """Pretrains the two-stage model and exposes frozen embeddings.

    Parameters follow the desk-scale defaults; transform output has shape
    (n_plays * (T - 1) * n_players, width) in (play, step, player) order.
    """

    def __init__(
        self,
        variant: str = "full",
        epochs: int = 20,
        batch_size: int = 8,
        learning_rate: float = 5e-4,
        alpha: float = 0.5,
        seed: int = 0,
        precision: str = "float32",
        topology_preset: str = "default17",
        encoder_widths: tuple[int, ...] = (16, 32, 32, 64, 64),
        embed_dim: int = 64,
        n_layers: int = 2,
        n_heads: int = 4,
        width: int = 64,
    ):
        self.variant = variant
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.alpha = alpha
        self.seed = seed
        self.precision = precision
        self.topology_preset = topology_preset
        self.encoder_widths = encoder_widths
        self.embed_dim = embed_dim
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.width = width

    def _configs(self):
        encoder_cfg = EncoderConfig(
            block_widths=tuple(self.encoder_widths),
            kernel_sizes=(3,) * len(self.encoder_widths),
            strides=(2, 3) + (1,) * (len(self.encoder_widths) - 2),
            embed_dim=self.embed_dim,
        )
        transformer_cfg = TransformerConfig(
            n_layers=self.n_layers, n_heads=self.n_heads, width=self.width
        )
        train_cfg = TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            alpha=self.alpha,
            seed=self.seed,
            precision=self.precision,
        )
        return encoder_cfg, transformer_cfg, train_cfg

    def fit(self, X, y=None):
        """Pretrain on a list of plays; ``y`` is ignored."""
        get_variant(self.variant)
        self.topology_ = build_topology(self.topology_preset)
        plays = check_play_list(X, self.topology_)
        encoder_cfg, transformer_cfg, train_cfg = self._configs()
        self.model_ = PlayModel(self.topology_, encoder_cfg, transformer_cfg,
                                variant=self.variant)
        self.trace_ = pretrain(plays, self.model_, train_cfg)
        self.model_.eval()
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        plays = check_play_list(X, self.topology_)
        table = extract_embeddings(self.model_, plays)
        n_plays, t_eff, n_players, width = table.embeddings.shape
        return table.embeddings.reshape(n_plays * t_eff * n_players, width)

    def row_index(self, X) -> np.ndarray:
        """(play, step, player) triple for each transform row."""
        plays = check_play_list(X)
        t_eff = plays[0].n_steps - 1
        n = plays[0].n_players
        grid = np.stack(np.meshgrid(np.arange(len(plays)), np.arange(t_eff),
                                    np.arange(n), indexing="ij"), axis=-1)
        return grid.reshape(-1, 3)
