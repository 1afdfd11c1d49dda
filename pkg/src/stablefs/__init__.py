"""stablefs: online selection of stable feature sets from sample streams.

The package ingests high-dimensional telemetry traces, ranks features with
one of three back-ends (relevance/redundancy, Laplacian score on a sample
graph, or random-forest importance), and searches online for the smallest
feature-set size whose top-k set has stabilized, reporting the set, its
size k, and the number of samples t_k it took. An evaluation harness
measures the prediction cost of the reduced set with online and offline
protocols, and a synthetic generator provides traces with planted ground
truth.
"""

from .errors import StablefsError
from .evaluation import (
    ExperimentReport,
    NmaeReport,
    SimilarityTable,
    nmae,
    nmae1_protocol,
    nmae2_protocol,
    run_study,
    similarity_evolution,
)
from .forest import RegressionForest, fit, predict, predict_matrix
from .osfs import OsfsConfig, OsfsResult, OsfsState, run_offline, sim
from .ranking import (
    ARR,
    LS,
    METHODS,
    TB,
    FeatureSet,
    RankedFeatureList,
    arr_rank,
    ls_rank,
    rank,
    subset,
    tb_rank,
)
from .synth import FlashCrowdLoad, PeriodicLoad, SynthSpec, generate, latent_load
from .trace import (
    DesignMatrix,
    FeatureId,
    PreprocessReport,
    Sample,
    load_trace,
    prefix,
    preprocess,
    restrict,
    tail,
    write_trace,
)

__version__ = "0.1.0"

__all__ = [
    "ARR", "LS", "TB", "METHODS",
    "DesignMatrix", "FeatureId", "PreprocessReport", "Sample",
    "ExperimentReport", "FeatureSet", "FlashCrowdLoad", "NmaeReport",
    "OsfsConfig", "OsfsResult", "OsfsState", "PeriodicLoad",
    "RankedFeatureList", "RegressionForest", "SimilarityTable",
    "StablefsError", "SynthSpec",
    "arr_rank", "fit", "generate", "latent_load", "load_trace", "ls_rank",
    "nmae", "nmae1_protocol", "nmae2_protocol", "predict", "predict_matrix",
    "prefix", "preprocess", "rank", "restrict", "run_offline", "run_study",
    "sim", "similarity_evolution", "subset", "tail", "tb_rank", "write_trace",
]
