"""Balanced pseudo-random sampling of network designs and RCT plan construction.

Designs are drawn in two stages. Stage one pairs balanced streams over width,
batch size, optimiser, momentum and learning rate into incomplete designs. These
are copied for every dropout rate and each copy is completed with a depth drawn
from a balanced stream over the depths that keep correlation information alive
at that rate. The completed set is then copied for every dataset. A plan
crosses the designs with every group label, so all groups see identical designs.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError
from .meanfield import correlation_depth_scale

__all__ = [
    "ComponentSets",
    "Design",
    "WorkItem",
    "ExperimentPlan",
    "balanced_stream",
    "depth_set",
    "sample_designs",
    "build_plan",
    "work_item_seed",
]


def _full_scale_depths():
    return [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 15, 20]


@dataclass
class ComponentSets:
    """The discrete sets whose Cartesian product is the design space."""

    datasets: list = field(default_factory=lambda: ["MNIST", "FashionMNIST", "CIFAR-10", "CIFAR-100"])
    depths: list = field(default_factory=_full_scale_depths)
    widths: list = field(default_factory=lambda: [400, 600, 800])
    rates: list = field(default_factory=lambda: [0.0, 0.1, 0.3, 0.5])
    batch_sizes: list = field(default_factory=lambda: [32, 64, 128, 256])
    optimisers: list = field(default_factory=lambda: ["sgd", "adam", "rmsprop"])
    momenta: list = field(default_factory=lambda: [0.0, 0.5, 0.9])
    learning_rates: list = field(default_factory=lambda: [1e-3, 1e-4, 1e-5, 1e-6])

    def validate(self):
        for name, values in asdict(self).items():
            if not values:
                raise ConfigurationError(f"component set {name!r} is empty")
        return self


@dataclass(frozen=True)
class Design:
    id: int
    dataset: str
    depth: int
    width: int
    theta: float
    batch_size: int
    optimiser: str
    momentum: float
    learning_rate: float

    def to_json(self):
        # field order is part of the reproducibility contract
        return {
            "id": self.id,
            "dataset": self.dataset,
            "depth": self.depth,
            "width": self.width,
            "theta": self.theta,
            "batch": self.batch_size,
            "optimiser": self.optimiser,
            "momentum": self.momentum,
            "lr": self.learning_rate,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            id=int(obj["id"]),
            dataset=obj["dataset"],
            depth=int(obj["depth"]),
            width=int(obj["width"]),
            theta=float(obj["theta"]),
            batch_size=int(obj["batch"]),
            optimiser=obj["optimiser"],
            momentum=float(obj["momentum"]),
            learning_rate=float(obj["lr"]),
        )


@dataclass(frozen=True)
class WorkItem:
    design: Design
    group: str
    seed: int


@dataclass(frozen=True)
class ExperimentPlan:
    designs: tuple
    groups: tuple
    assignments: tuple
    seed: int

    def to_json(self, sets=None):
        obj = {"seed": self.seed}
        if sets is not None:
            obj["component_sets"] = asdict(sets)
        obj["designs"] = [d.to_json() for d in self.designs]
        obj["groups"] = list(self.groups)
        return obj

    def dumps(self, sets=None):
        return json.dumps(self.to_json(sets), indent=2) + "\n"


def balanced_stream(items, count, rng):
    """Concatenate independent random permutations of ``items`` and cut to ``count``.

    Any prefix of length ``n * len(items)`` contains every element exactly ``n`` times.
    """
    items = list(items)
    if not items:
        raise ValueError("cannot build a balanced stream from an empty set")
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count!r}")
    out = []
    while len(out) < count:
        out.extend(items[i] for i in rng.permutation(len(items)))
    return out[:count]


def depth_set(theta, depths):
    """Depths in ``depths`` that are at least 2 and at most ``floor(ell_rho(theta))``."""
    limit = correlation_depth_scale(theta)
    cap = math.inf if math.isinf(limit) else math.floor(limit)
    out = sorted(d for d in depths if 2 <= d <= cap)
    if not out:
        raise ConfigurationError(f"no admissible depth in {list(depths)} for theta={theta}")
    return out


def sample_designs(sets, per_cell, rng):
    """Draw ``per_cell`` designs for every (dataset, dropout rate) cell.

    The incomplete designs are shared by all rates and the completed designs are
    shared by all datasets. Ids are dense integers in generation order
    (dataset-major, then rate, then draw index).
    """
    sets.validate()
    if per_cell < 1:
        raise ValueError(f"per_cell must be >= 1, got {per_cell!r}")

    widths = balanced_stream(sets.widths, per_cell, rng)
    batches = balanced_stream(sets.batch_sizes, per_cell, rng)
    optimisers = balanced_stream(sets.optimisers, per_cell, rng)
    momenta = balanced_stream(sets.momenta, per_cell, rng)
    rates_lr = balanced_stream(sets.learning_rates, per_cell, rng)
    incomplete = list(zip(widths, batches, optimisers, momenta, rates_lr))

    completed = []
    for theta in sets.rates:
        depths = balanced_stream(depth_set(theta, sets.depths), per_cell, rng)
        completed.append([(theta, depth, *rest) for depth, rest in zip(depths, incomplete)])

    designs = []
    for dataset in sets.datasets:
        for cell in completed:
            for theta, depth, width, batch, optimiser, momentum, lr in cell:
                designs.append(
                    Design(
                        id=len(designs),
                        dataset=dataset,
                        depth=int(depth),
                        width=int(width),
                        theta=float(theta),
                        batch_size=int(batch),
                        optimiser=optimiser,
                        momentum=float(momentum),
                        learning_rate=float(lr),
                    )
                )
    return designs


def work_item_seed(seed, design_id, label):
    """64-bit sub-seed for one (design, group) work item.

    Derived through :class:`numpy.random.SeedSequence`, so it depends only on its
    key and not on the order in which items are executed.
    """
    key = [seed & 0xFFFFFFFFFFFFFFFF, design_id, zlib.crc32(label.encode("utf-8"))]
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0])


def build_plan(designs, candidate_labels, seed):
    """Cross ``designs`` with ``candidate_labels``; design-major ordering."""
    labels = tuple(candidate_labels)
    if not labels:
        raise ValueError("at least one group label is required")
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate group labels in {labels}")
    ids = [d.id for d in designs]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate design ids: {dup}")
    assignments = tuple(
        WorkItem(design, label, work_item_seed(seed, design.id, label))
        for design in designs
        for label in labels
    )
    return ExperimentPlan(tuple(designs), labels, assignments, seed)
