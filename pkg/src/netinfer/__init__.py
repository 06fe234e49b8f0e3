"""Joint network-topology and graph-filter inference by annealed Langevin sampling."""

from .graphs import (
    AdjacencyState,
    laplacian,
    partition_entries,
    round_project,
    unvech,
    vech,
    vech_pairs,
)
from .filters import GraphFilter, HeatDiffusionFilter, PolynomialFilter, expm, expm_frechet
from .likelihood import SignalSet, grad_theta, log_likelihood, score_edges
from .priors import (
    BernoulliScore,
    EmpiricalScore,
    LearnedScore,
    ScoreNetWeights,
    ScoreProvider,
    ZeroScore,
    load_weights,
    save_weights,
    scorenet_forward,
)
from .sampler import (
    Adam,
    AnnealingSchedule,
    InferenceResult,
    enumerate_posterior,
    langevin_step,
    run_inference,
)
from .datasets import (
    ExperimentInstance,
    GraphDataset,
    generate_ego_like,
    generate_grid,
    load_corpus,
    make_instance,
    synthesize_signals,
)
from .harness import (
    BenchmarkConfig,
    f1_score,
    run_adam_mle_baseline,
    run_benchmark,
    theta_nrmse,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyState",
    "Adam",
    "AnnealingSchedule",
    "BenchmarkConfig",
    "BernoulliScore",
    "EmpiricalScore",
    "ExperimentInstance",
    "GraphDataset",
    "GraphFilter",
    "HeatDiffusionFilter",
    "InferenceResult",
    "LearnedScore",
    "PolynomialFilter",
    "ScoreNetWeights",
    "ScoreProvider",
    "SignalSet",
    "ZeroScore",
    "enumerate_posterior",
    "expm",
    "expm_frechet",
    "f1_score",
    "generate_ego_like",
    "generate_grid",
    "grad_theta",
    "langevin_step",
    "laplacian",
    "load_corpus",
    "load_weights",
    "log_likelihood",
    "make_instance",
    "partition_entries",
    "round_project",
    "run_adam_mle_baseline",
    "run_benchmark",
    "run_inference",
    "save_weights",
    "score_edges",
    "scorenet_forward",
    "synthesize_signals",
    "theta_nrmse",
    "unvech",
    "vech",
    "vech_pairs",
]
