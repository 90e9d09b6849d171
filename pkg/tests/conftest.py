import numpy as np
import pytest
import torch

from playsense import (
    EncoderConfig,
    PlayModel,
    PlayScript,
    TransformerConfig,
    build_topology,
    generate_play,
    sample_plays,
    seed_parameters,
)

# keep unit tests fast and reproducible on small CI boxes
torch.set_num_threads(min(torch.get_num_threads(), 2))


TINY_ENCODER = EncoderConfig(block_widths=(4, 4), kernel_sizes=(3, 3), strides=(2, 3),
                             embed_dim=8)
TINY_TRANSFORMER = TransformerConfig(n_layers=1, n_heads=2, width=16)


@pytest.fixture(scope="session")
def topology():
    return build_topology()


@pytest.fixture(scope="session")
def iso_play(topology):
    script = PlayScript(kind="iso_shot", actors={"shooter": 1}, event_frame=20,
                        shot_type="jumpshot", margin=10)
    return generate_play(script, topology, n_players=4, n_steps=32, seed=3)


@pytest.fixture(scope="session")
def small_plays(topology):
    return sample_plays(topology, n_plays=10, n_players=4, n_steps=32, seed=0)


@pytest.fixture()
def tiny_model(topology):
    model = PlayModel(topology, TINY_ENCODER, TINY_TRANSFORMER, variant="full")
    seed_parameters(model, 0)
    model.eval()
    return model


def make_tiny_model(topology, variant="full", seed=0, dtype=torch.float32):
    model = PlayModel(topology, TINY_ENCODER, TINY_TRANSFORMER, variant=variant)
    seed_parameters(model, seed)
    model.to(dtype)
    model.eval()
    return model
