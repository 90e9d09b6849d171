"""Skeleton-aware multi-player motion embeddings for play anticipation.

Two-stage pipeline: a directed-graph skeleton encoder turns 30 Hz joints
into per-step pose embeddings; a masked multi-player transformer trained
jointly on binned step prediction and temporal event projection turns those
into play-aware player embeddings. A synthetic play generator with planted
skeletal intent precursors and a linear-probing benchmark make the whole
chain testable end to end.
"""

from .bench import (
    AblationReport,
    EmbeddingTable,
    ProbeDataset,
    ProbeTask,
    TASKS,
    build_probe_dataset,
    data_efficiency_sweep,
    eval_task_curve,
    extract_embeddings,
    run_ablation_matrix,
    split_play_ids,
)
from .checkpoint import Checkpoint, load_checkpoint, restore_model, save_checkpoint
from .config import ConfigError, RunConfig, dump_config, load_config, parse_config
from .court import (
    DegeneratePoseError,
    beyond_arc,
    compute_shoulder_normal,
    shoulder_normal_track,
)
from .dataset_io import load_dataset, save_dataset
from .encoder import (
    CausalConv,
    DgnBlock,
    EncoderConfig,
    GraphState,
    PoseEncoder,
    aggregate_incoming,
    aggregate_outgoing,
    causal_conv,
    encode_pose_window,
    init_graph_state,
)
from .estimators import PlayEmbedder
from .generator import MissingSidecarError, generate_play, sample_plays, sample_script
from .labelers import (
    AssistChain,
    AssistParams,
    PickParams,
    assist_chains,
    label_assists,
    label_picks,
)
from .metrics import average_precision, pr_curve
from .model import PlayModel, TransformerConfig, Variant, VARIANTS, seed_parameters
from .objectives import (
    BinGrid,
    WindowConfig,
    bin_delta,
    bin_deltas,
    derive_event_windows,
    event_bce,
    total_loss,
    trajectory_nll,
)
from .play import (
    BallSidecar,
    EVENT_NAMES,
    EventVocabulary,
    PassEvent,
    PlayScript,
    PlaySequence,
    ShotEvent,
)
from .probe import LinearProbe, train_linear_probe
from .topology import SkeletonTopology, build_topology
from .training import (
    LossTrace,
    TrainConfig,
    TrainingDivergedError,
    eval_nll_by_timestep,
    gradient_check,
    pretrain,
)
from .transformer import (
    EventHeads,
    FeatureAssembler,
    FeatureBundle,
    MaskedTransformer,
    RowIndex,
    TrajectoryHead,
    build_attention_mask,
    event_projection,
    extract_state_rows,
    trajectory_head,
    transformer_forward,
)

__version__ = "0.1.0"
