"""Minimal fully-connected network engine, trainer and Monte Carlo moment lab."""

from .data import Dataset, SyntheticSpec, load_csv, load_dataset, load_idx_pair, make_synthetic, parse_idx
from .moments import MomentEstimate, estimate_moments, make_input_pair, moment_spec, theory_trajectory
from .network import (
    ForwardCache,
    NetworkSpec,
    NetworkState,
    accuracy,
    backward,
    forward,
    init_network,
    sample_masks,
    softmax_cross_entropy,
)
from .optim import Optimiser, optimiser_step
from .train import MetricsRecord, TrainingSchedule, train
