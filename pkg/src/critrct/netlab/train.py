"""Mini-batch training loop and the two RCT metrics.

``tau_s`` is the training-set accuracy read at ``speed_checkpoint_epoch``;
``tau_g`` is the best test-set accuracy seen at the end of any epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..meanfield import HyperParams
from .network import NetworkSpec, accuracy, backward, forward, init_network, softmax_cross_entropy
from .optim import Optimiser


@dataclass(frozen=True)
class TrainingSchedule:
    epochs: int = 500
    speed_checkpoint_epoch: int = 100
    lr_decay: float | None = None
    dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs!r}")
        if not 1 <= self.speed_checkpoint_epoch <= self.epochs:
            raise ValueError(
                f"speed_checkpoint_epoch must lie in [1, {self.epochs}], got {self.speed_checkpoint_epoch!r}"
            )
        if self.lr_decay is not None and not 0 < self.lr_decay <= 1:
            raise ValueError(f"lr_decay must lie in (0, 1], got {self.lr_decay!r}")


@dataclass(frozen=True)
class MetricsRecord:
    design_id: int
    group_label: str
    tau_s: float
    tau_g: float
    diverged: bool
    epochs_run: int = 0


def train(
    design,
    sigma_w_sq,
    data,
    schedule,
    rng,
    group_label="",
    activation="relu",
    init_scheme="scaled",
):
    """Train one network for ``design`` initialised with ``sigma_w_sq``.

    A non-finite loss, gradient or evaluation stops the run and marks it
    diverged. Its metrics then keep the last finite values, or chance level
    ``1 / n_classes`` for anything never measured.
    """
    if design.dataset != data.name and data.name not in ("", None):
        raise ConfigurationError(f"design {design.id} wants dataset {design.dataset!r}, got {data.name!r}")
    dtype = np.dtype(schedule.dtype)
    spec = NetworkSpec(
        input_dim=data.input_dim,
        hidden_width=design.width,
        depth=design.depth,
        output_dim=data.n_classes,
        theta=design.theta,
        init=HyperParams(sigma_w_sq if sigma_w_sq is not None else 1.0, 0.0, design.theta),
        activation=activation,
        init_scheme=init_scheme,
    )
    state = init_network(spec, rng, dtype)
    params = state.params
    opt = Optimiser(design.optimiser, design.learning_rate, design.momentum)
    x_train = data.x_train.astype(dtype, copy=False)
    x_test = data.x_test.astype(dtype, copy=False)
    y_train, y_test = data.y_train, data.y_test

    chance = 1.0 / data.n_classes
    tau_s = None
    tau_g = None
    diverged = False
    n = len(x_train)
    bs = design.batch_size
    epoch = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        for epoch in range(1, schedule.epochs + 1):
            order = rng.permutation(n)
            for start in range(0, n, bs):
                idx = order[start:start + bs]
                cache = forward(state, spec, x_train[idx], "train", rng)
                loss, probs = softmax_cross_entropy(cache.logits, y_train[idx])
                if not math.isfinite(loss):
                    diverged = True
                    break
                gw, gb = backward(state, spec, cache, y_train[idx], probs=probs)
                if not opt.step(params, gw + gb):
                    diverged = True
                    break
            if diverged:
                break
            test_acc = accuracy(state, spec, x_test, y_test)
            if math.isnan(test_acc):
                diverged = True
                break
            tau_g = test_acc if tau_g is None else max(tau_g, test_acc)
            if epoch == schedule.speed_checkpoint_epoch:
                train_acc = accuracy(state, spec, x_train, y_train)
                if math.isnan(train_acc):
                    diverged = True
                    break
                tau_s = train_acc
            if schedule.lr_decay is not None:
                opt.lr *= schedule.lr_decay

    # only a diverged run can miss the checkpoint
    if tau_s is None:
        tau_s = chance
    if tau_g is None:
        tau_g = chance
    return MetricsRecord(design.id, group_label, float(tau_s), float(tau_g), diverged, epoch)
