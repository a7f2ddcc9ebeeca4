"""Self-supervised subgraph contrast with optimal-transport losses."""

from .config import TrainConfig, load_config
from .encoder import EncoderParams, encode, init_encoder_params
from .errors import CheckpointError, ConfigError, IngestionError, ProbeError
from .generator import (
    GeneratedSubgraph,
    GeneratorParams,
    generate_edges,
    generate_subgraph,
    init_generator_params,
)
from .graphs import Graph, Subgraph, graph_from_edges, load_graph, load_graph_dir
from .losses import ContrastBatch, LossValues, build_pairs, gwd_loss, total_loss, wd_loss
from .probe import ProbeResult, linear_probe
from .sampling import bfs_sample, master_stream
from .synth import gen_synth_sbm
from .training import ModelParams, TrainResult, embed, init_model, load_model, train
from .transport import (
    TransportPlan,
    gromov_wasserstein,
    intra_distances_generated,
    intra_distances_sampled,
    node_cost_matrix,
    sinkhorn,
    subgraph_distances,
    uniform_marginals,
    wasserstein,
)

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "ContrastBatch",
    "EncoderParams",
    "GeneratedSubgraph",
    "GeneratorParams",
    "Graph",
    "IngestionError",
    "LossValues",
    "ModelParams",
    "ProbeError",
    "ProbeResult",
    "Subgraph",
    "TrainConfig",
    "TrainResult",
    "TransportPlan",
    "bfs_sample",
    "build_pairs",
    "embed",
    "encode",
    "gen_synth_sbm",
    "generate_edges",
    "generate_subgraph",
    "graph_from_edges",
    "gromov_wasserstein",
    "gwd_loss",
    "init_encoder_params",
    "init_generator_params",
    "init_model",
    "intra_distances_generated",
    "intra_distances_sampled",
    "linear_probe",
    "load_config",
    "load_graph",
    "load_graph_dir",
    "load_model",
    "master_stream",
    "node_cost_matrix",
    "sinkhorn",
    "subgraph_distances",
    "total_loss",
    "train",
    "uniform_marginals",
    "wasserstein",
    "wd_loss",
]
