"""Smash2.0: PFSA models, sequence-likelihood divergence and a universal
time-series distance."""

from .genesess import InferParams, InferReport, empirical_derivative, infer, scc_terminal, select_sync_sequence
from .measures import (
    entropy_rate,
    filter_update,
    joint_stationary,
    kl_divergence,
    log_likelihood,
    seq_probability,
)
from .metric import BaseSet, default_base_set, distance, distance_matrix, featurize
from .pfsa import Pfsa, State, load_pfsa, minimize, sample, save_pfsa, stationary_distribution, transition_matrix, validate
from .quantize import (
    LabeledDataset,
    QuantScheme,
    apply_scheme,
    class_separation,
    format_scheme,
    maxent_partition,
    parse_scheme,
    scheme_search,
)

__version__ = "0.1.0"
