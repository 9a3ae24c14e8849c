"""Named experiment configurations and ``key=value`` overrides.

A resolved :class:`ExperimentConfig` fixes everything a run needs: the
component sets and cell size for design sampling, the training schedule, the
dataset source and the interventions applied to the groups. It round-trips
through JSON so every run can store the exact configuration it used.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .designspace import ComponentSets
from .errors import ConfigurationError
from .initgen import candidate_labels, generate_candidates
from .meanfield import critical_init
from .netlab.data import SyntheticSpec, load_dataset
from .netlab.train import TrainingSchedule

PRESETS = ("paper-faithful", "desk-scale", "appendix-e-activations", "appendix-e-lr-decay")
GROUP_KINDS = ("candidates", "activations", "init-schemes")

ACTIVATION_LABELS = ("linear", "sigmoid", "relu")
INIT_SCHEME_LABELS = ("He", "Xavier")


@dataclass
class DataSource:
    """Where training data comes from.

    ``kind="synthetic"`` builds a Gaussian-mixture task from the ``synthetic``
    fields (every design's dataset must then be named like it).
    ``kind="directory"`` loads ``root/<dataset>`` for each design, which may
    hold MNIST-style IDX files or a CSV.
    """

    kind: str = "synthetic"
    synthetic: dict = field(default_factory=lambda: asdict(SyntheticSpec()))
    root: str = "data"
    test_fraction: float = 0.2

    def validate(self):
        if self.kind not in ("synthetic", "directory"):
            raise ConfigurationError(f"data.kind must be 'synthetic' or 'directory', got {self.kind!r}")
        if self.kind == "synthetic":
            try:
                SyntheticSpec(**self.synthetic)
            except TypeError as exc:
                raise ConfigurationError(f"bad synthetic data fields: {exc}") from None
        return self

    def load(self, dataset_name):
        if self.kind == "synthetic":
            spec = SyntheticSpec(**self.synthetic)
            if dataset_name != spec.name:
                raise ConfigurationError(
                    f"design asks for dataset {dataset_name!r} but the synthetic task is {spec.name!r}"
                )
            return load_dataset(spec)
        path = Path(self.root) / dataset_name
        if not path.exists():
            csv_path = path.with_suffix(".csv")
            if csv_path.exists():
                path = csv_path
            else:
                raise ConfigurationError(f"no data for {dataset_name!r} under {self.root!r}")
        return load_dataset(path, test_fraction=self.test_fraction, name=dataset_name)


@dataclass
class ExperimentConfig:
    preset: str
    sets: ComponentSets
    per_cell: int
    schedule: TrainingSchedule
    data: DataSource
    groups: str = "candidates"
    control: str = "C"
    nu0: float = 1.0

    def validate(self):
        self.sets.validate()
        self.data.validate()
        if self.per_cell < 1:
            raise ConfigurationError(f"per_cell must be >= 1, got {self.per_cell!r}")
        if self.groups not in GROUP_KINDS:
            raise ConfigurationError(f"groups must be one of {GROUP_KINDS}, got {self.groups!r}")
        if self.control not in self.labels:
            raise ConfigurationError(f"control {self.control!r} is not one of the groups {self.labels}")
        if self.data.kind == "synthetic":
            name = self.data.synthetic.get("name", SyntheticSpec.name)
            stray = [d for d in self.sets.datasets if d != name]
            if stray:
                raise ConfigurationError(f"datasets {stray} are not the synthetic task {name!r}")
        return self

    @property
    def labels(self):
        if self.groups == "candidates":
            return tuple(candidate_labels())
        if self.groups == "activations":
            return ACTIVATION_LABELS
        return INIT_SCHEME_LABELS

    def intervention(self, design, label):
        """``(sigma_w_sq, activation, init_scheme)`` for ``design`` in group ``label``.

        ``sigma_w_sq`` is ``None`` for Xavier initialisation, whose variance is
        set per layer from the fan-in and fan-out.
        """
        if label not in self.labels:
            raise ConfigurationError(f"unknown group {label!r}; groups are {self.labels}")
        if self.groups == "candidates":
            candidates = generate_candidates(design.theta, design.depth, nu0=self.nu0)
            return candidates[label], "relu", "scaled"
        if self.groups == "activations":
            return critical_init(design.theta).sigma_w_sq, label, "scaled"
        if label == "He":
            return 2.0, "relu", "scaled"
        return None, "relu", "xavier"

    def to_json(self):
        return {
            "preset": self.preset,
            "sets": asdict(self.sets),
            "per_cell": self.per_cell,
            "schedule": asdict(self.schedule),
            "data": asdict(self.data),
            "groups": self.groups,
            "control": self.control,
            "nu0": self.nu0,
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2) + "\n"

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(
                preset=obj["preset"],
                sets=ComponentSets(**obj["sets"]),
                per_cell=int(obj["per_cell"]),
                schedule=TrainingSchedule(**obj["schedule"]),
                data=DataSource(**obj["data"]),
                groups=obj.get("groups", "candidates"),
                control=obj.get("control", "C"),
                nu0=float(obj.get("nu0", 1.0)),
            ).validate()
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed experiment config: {exc}") from None


def _desk_sets():
    return ComponentSets(
        datasets=["synthetic"],
        depths=[2, 3, 4, 5, 6, 7, 8, 10, 12],
        widths=[32, 64, 96],
        rates=[0.0, 0.1, 0.3, 0.5],
        batch_sizes=[32, 64, 128],
        optimisers=["sgd", "adam", "rmsprop"],
        momenta=[0.0, 0.5, 0.9],
        learning_rates=[1e-2, 1e-3],
    )


def _desk_data():
    spec = SyntheticSpec(
        dim=32, n_classes=4, clusters_per_class=2, n_train=2000, n_test=500, separation=4.0, seed=0,
    )
    return DataSource(kind="synthetic", synthetic=asdict(spec))


def _desk_schedule(**extra):
    return TrainingSchedule(epochs=20, speed_checkpoint_epoch=10, **extra)


def get_preset(name):
    """The resolved configuration of a named preset."""
    if name == "paper-faithful":
        return ExperimentConfig(
            preset=name,
            sets=ComponentSets(),
            per_cell=70,
            schedule=TrainingSchedule(epochs=500, speed_checkpoint_epoch=100),
            data=DataSource(kind="directory", root="data"),
        ).validate()
    if name == "desk-scale":
        return ExperimentConfig(
            preset=name, sets=_desk_sets(), per_cell=6, schedule=_desk_schedule(), data=_desk_data(),
        ).validate()
    if name == "appendix-e-activations":
        return ExperimentConfig(
            preset=name,
            sets=_desk_sets(),
            per_cell=10,
            schedule=_desk_schedule(),
            data=_desk_data(),
            groups="activations",
            control="relu",
        ).validate()
    if name == "appendix-e-lr-decay":
        return ExperimentConfig(
            preset=name,
            sets=_desk_sets(),
            per_cell=10,
            schedule=_desk_schedule(lr_decay=0.95),
            data=_desk_data(),
            groups="init-schemes",
            control="He",
        ).validate()
    raise ConfigurationError(f"unknown preset {name!r}; choose from {PRESETS}")


def parse_value(text):
    """JSON if it parses (numbers, lists, ``null``, ``true``), otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(config, overrides):
    """Return a copy of ``config`` with ``key=value`` overrides applied.

    Keys are dotted paths into the JSON form, e.g. ``per_cell=3``,
    ``schedule.epochs=10``, ``sets.widths=[32,64]`` or
    ``data.synthetic.n_train=500``.
    """
    obj = copy.deepcopy(config.to_json())
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        path = key.strip().split(".")
        node = obj
        for part in path[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigurationError(f"unknown config key {key!r}")
            node = node[part]
        if not isinstance(node, dict) or path[-1] not in node:
            raise ConfigurationError(f"unknown config key {key!r}")
        node[path[-1]] = parse_value(raw.strip())
    try:
        return ExperimentConfig.from_json(obj)
    except ValueError as exc:
        raise ConfigurationError(f"invalid override: {exc}") from None


def resolve(preset, overrides=()):
    return apply_overrides(get_preset(preset), overrides)


__all__ = [
    "PRESETS",
    "DataSource",
    "ExperimentConfig",
    "get_preset",
    "apply_overrides",
    "parse_value",
    "resolve",
]
