import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critrct.designspace import (
    ComponentSets,
    Design,
    balanced_stream,
    build_plan,
    depth_set,
    sample_designs,
    work_item_seed,
)
from critrct.errors import ConfigurationError
from critrct.initgen import candidate_labels
from critrct.meanfield import correlation_depth_scale


class TestBalancedStream:
    def test_two_rounds(self):
        out = balanced_stream(["a", "b", "c"], 6, np.random.default_rng(0))
        assert Counter(out) == {"a": 2, "b": 2, "c": 2}

    def test_singleton(self):
        assert balanced_stream(["x"], 5, np.random.default_rng(0)) == ["x"] * 5

    def test_empty_set(self):
        with pytest.raises(ValueError):
            balanced_stream([], 3, np.random.default_rng(0))

    @given(size=st.integers(1, 7), count=st.integers(1, 60), seed=st.integers(0, 2**32 - 1))
    def test_prefix_balance(self, size, count, seed):
        items = list(range(size))
        out = balanced_stream(items, count, np.random.default_rng(seed))
        assert len(out) == count
        for n in range(1, count // size + 1):
            assert Counter(out[: n * size]) == {i: n for i in items}
        counts = Counter(out)
        assert max(counts.values()) - min(counts.get(i, 0) for i in items) <= 1

    def test_pairing_of_independent_streams(self):
        rng = np.random.default_rng(3)
        widths = balanced_stream([400, 600, 800], 4, rng)
        lrs = balanced_stream([1e-3, 1e-4, 1e-5, 1e-6], 4, rng)
        pairs = list(zip(widths, lrs))
        assert all(w in (400, 600, 800) and lr in (1e-3, 1e-4, 1e-5, 1e-6) for w, lr in pairs)
        assert sorted(lrs) == sorted([1e-3, 1e-4, 1e-5, 1e-6])


class TestDepthSet:
    def test_no_dropout_keeps_deep(self):
        ds = depth_set(0.0, ComponentSets().depths)
        assert 15 in ds and 20 in ds and min(ds) == 2

    def test_half_dropout(self):
        assert depth_set(0.5, ComponentSets().depths) == [2, 3, 4]

    def test_rate_03(self):
        assert depth_set(0.3, ComponentSets().depths) == [2, 3, 4, 5, 6, 7]

    def test_rate_01_max_13(self):
        assert max(depth_set(0.1, ComponentSets().depths)) == 13

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            depth_set(0.5, [8, 9])


def _cell(designs, dataset, theta):
    return [d for d in designs if d.dataset == dataset and d.theta == theta]


class TestSampleDesigns:
    def test_full_scale_size(self):
        designs = sample_designs(ComponentSets(), 70, np.random.default_rng(0))
        assert len(designs) == 1120
        assert [d.id for d in designs] == list(range(1120))

    def test_single(self):
        sets = ComponentSets(datasets=["MNIST"], rates=[0.3])
        (d,) = sample_designs(sets, 1, np.random.default_rng(1))
        assert d.dataset == "MNIST" and d.theta == 0.3
        assert d.width in sets.widths and d.batch_size in sets.batch_sizes
        assert d.optimiser in sets.optimisers and d.momentum in sets.momenta
        assert d.learning_rate in sets.learning_rates and 2 <= d.depth <= 7

    def test_cell_balance(self):
        designs = sample_designs(ComponentSets(), 70, np.random.default_rng(2))
        cell = _cell(designs, "MNIST", 0.1)
        assert len(cell) == 70
        counts = Counter(d.width for d in cell)
        assert set(counts.values()) <= {70 // 3, 70 // 3 + 1}

    def test_depth_admissible(self):
        designs = sample_designs(ComponentSets(), 70, np.random.default_rng(3))
        for d in designs:
            assert d.depth >= 2
            if d.theta > 0:
                assert d.depth <= int(correlation_depth_scale(d.theta))

    def test_incomplete_designs_shared_across_rates_and_datasets(self):
        designs = sample_designs(ComponentSets(), 10, np.random.default_rng(4))

        def rest(d):
            return (d.width, d.batch_size, d.optimiser, d.momentum, d.learning_rate)

        base = [rest(d) for d in _cell(designs, "MNIST", 0.0)]
        for dataset in ComponentSets().datasets:
            for theta in ComponentSets().rates:
                assert [rest(d) for d in _cell(designs, dataset, theta)] == base
        mnist = [(d.theta, d.depth) for d in designs if d.dataset == "MNIST"]
        cifar = [(d.theta, d.depth) for d in designs if d.dataset == "CIFAR-10"]
        assert mnist == cifar

    def test_empty_set(self):
        with pytest.raises(ConfigurationError):
            sample_designs(ComponentSets(widths=[]), 3, np.random.default_rng(0))

    def test_deterministic(self):
        a = sample_designs(ComponentSets(), 5, np.random.default_rng(9))
        b = sample_designs(ComponentSets(), 5, np.random.default_rng(9))
        assert a == b


class TestPlan:
    def test_full_scale_plan_size(self):
        designs = sample_designs(ComponentSets(), 70, np.random.default_rng(0))
        plan = build_plan(designs, candidate_labels(), seed=1)
        assert len(plan.assignments) == 12320

    def test_one_by_one(self):
        d = Design(0, "MNIST", 3, 400, 0.0, 32, "sgd", 0.0, 1e-3)
        plan = build_plan([d], ["C"], seed=0)
        assert len(plan.assignments) == 1

    def test_groups_identical(self):
        designs = sample_designs(ComponentSets(), 4, np.random.default_rng(5))
        plan = build_plan(designs, candidate_labels(), seed=2)
        by_group = {}
        for item in plan.assignments:
            by_group.setdefault(item.group, []).append(item.design)
        first = by_group["C"]
        assert all(Counter(v) == Counter(first) for v in by_group.values())
        seeds = [item.seed for item in plan.assignments]
        assert len(set(seeds)) == len(seeds)

    def test_duplicate_ids(self):
        d = Design(0, "MNIST", 3, 400, 0.0, 32, "sgd", 0.0, 1e-3)
        with pytest.raises(ValueError):
            build_plan([d, d], ["C"], seed=0)

    def test_byte_identical_json(self):
        sets = ComponentSets()
        texts = []
        for _ in range(2):
            designs = sample_designs(sets, 3, np.random.default_rng(11))
            texts.append(build_plan(designs, candidate_labels(), seed=11).dumps(sets))
        assert texts[0] == texts[1]
        obj = json.loads(texts[0])
        assert list(obj) == ["seed", "component_sets", "designs", "groups"]
        assert list(obj["designs"][0]) == [
            "id", "dataset", "depth", "width", "theta", "batch", "optimiser", "momentum", "lr"]

    def test_json_round_trip(self):
        d = Design(7, "MNIST", 3, 400, 0.1, 32, "adam", 0.9, 1e-4)
        assert Design.from_json(json.loads(json.dumps(d.to_json()))) == d

    def test_seed_depends_only_on_key(self):
        assert work_item_seed(5, 3, "C") == work_item_seed(5, 3, "C")
        assert work_item_seed(5, 3, "C") != work_item_seed(5, 3, "R1")
        assert work_item_seed(5, 3, "C") != work_item_seed(6, 3, "C")
        assert 0 <= work_item_seed(5, 3, "C") < 2**64
