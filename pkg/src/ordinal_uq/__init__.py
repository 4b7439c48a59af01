"""Uncertainty estimates for ordinal (triplet) embeddings.

Bootstrap and Bayesian ensembles over triplet embeddings, triplet and point
uncertainties derived from them, and the experiment pipelines that use them.
"""

from ._accel import backend
from .embedding import Embedding, LossSpec, OptimizerConfig, embed, loss_and_gradient, triplet_probability
from .ensemble import (
    EmbeddingEnsemble,
    PriorSpec,
    bayesian_ensemble,
    bootstrap_ensemble,
    ess_step,
    procrustes_align,
)
from .triplets import (
    NoiseModel,
    Orientation,
    TripletSet,
    agreement_fraction,
    all_true_triplets,
    answer_comparison,
    read_triplets,
    sample_noisy_triplets,
    write_triplets,
)
from .uncertainty import (
    BayesianMethod,
    BootstrapMethod,
    DistanceStats,
    PointStats,
    distance_stats,
    folded_average_uncertainty,
    point_stats,
    predict_with_abstention,
    select_uncertain_batch,
    triplet_uncertainty,
)

__version__ = "0.1.0"
