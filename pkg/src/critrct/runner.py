"""Plan execution with a checksummed, resumable results CSV.

Work items run in a process pool but rows are written by the parent alone and
always in plan order, so the file is the same whatever the worker count. Each
row ends with a CRC32 of its other fields. On resume the longest prefix of
intact rows that matches the plan is kept, anything after it (typically a row
cut off mid-write) is truncated, and execution continues from there.
"""

from __future__ import annotations

import csv
import io
import json
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .designspace import build_plan, sample_designs
from .errors import ConfigurationError
from .netlab.train import train
from .presets import ExperimentConfig

RESULT_COLUMNS = (
    "design_id",
    "group_label",
    "dataset",
    "depth",
    "width",
    "theta",
    "batch",
    "optimiser",
    "momentum",
    "lr",
    "sigma_w_sq",
    "tau_s",
    "tau_g",
    "diverged",
    "seed",
    "checksum",
)

CONFIG_FILE = "config.json"
PLAN_FILE = "plan.json"
RESULTS_FILE = "results.csv"


def fmt(x):
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


def row_checksum(values):
    return format(zlib.crc32(",".join(values).encode("utf-8")), "08x")


def encode_line(values):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(values)
    return buf.getvalue()


def header_line():
    return encode_line(RESULT_COLUMNS)


def make_plan(config, seed):
    """Designs sampled from ``config`` and crossed with its group labels."""
    rng = np.random.default_rng(seed)
    designs = sample_designs(config.sets, config.per_cell, rng)
    return build_plan(designs, config.labels, seed)


def item_rng(seed):
    return np.random.Generator(np.random.Philox(seed))


# one dataset cache per worker process
_DATA_CACHE = {}


def _dataset(config, name):
    key = (json.dumps(config.to_json()["data"], sort_keys=True), name)
    if key not in _DATA_CACHE:
        _DATA_CACHE[key] = config.data.load(name)
    return _DATA_CACHE[key]


def run_item(config, item):
    """Train one work item and return its CSV fields (checksum included)."""
    design = item.design
    sigma_w_sq, activation, init_scheme = config.intervention(design, item.group)
    data = _dataset(config, design.dataset)
    record = train(
        design,
        sigma_w_sq,
        data,
        config.schedule,
        item_rng(item.seed),
        group_label=item.group,
        activation=activation,
        init_scheme=init_scheme,
    )
    values = [
        str(design.id),
        item.group,
        design.dataset,
        str(design.depth),
        str(design.width),
        fmt(design.theta),
        str(design.batch_size),
        design.optimiser,
        fmt(design.momentum),
        fmt(design.learning_rate),
        fmt(float("nan") if sigma_w_sq is None else sigma_w_sq),
        fmt(record.tau_s),
        fmt(record.tau_g),
        "1" if record.diverged else "0",
        str(item.seed),
    ]
    return values + [row_checksum(values)]


def _run_packed(args):
    config_json, item = args
    return run_item(ExperimentConfig.from_json(config_json), item)


def parse_row(line):
    """CSV fields of one complete line, or ``None`` if the line is damaged."""
    if not line.endswith("\n"):
        return None
    try:
        (values,) = list(csv.reader([line[:-1]]))
    except (csv.Error, ValueError):
        return None
    if len(values) != len(RESULT_COLUMNS):
        return None
    if row_checksum(values[:-1]) != values[-1]:
        return None
    return values


def valid_prefix(path, assignments):
    """Count of leading rows in ``path`` that are intact and match the plan, and their byte length."""
    raw = Path(path).read_bytes()
    text = raw.decode("utf-8", errors="replace")
    lines = text.splitlines(keepends=True)
    if not lines or lines[0] != header_line():
        return 0, 0
    n_bytes = len(lines[0].encode("utf-8"))
    count = 0
    for line, item in zip(lines[1:], assignments):
        values = parse_row(line)
        if values is None or values[0] != str(item.design.id) or values[1] != item.group:
            break
        if values[14] != str(item.seed):
            break
        count += 1
        n_bytes += len(line.encode("utf-8"))
    return count, n_bytes


def _check_same(path, content, what):
    existing = Path(path).read_text(encoding="utf-8")
    if existing != content:
        raise ConfigurationError(
            f"{path} holds a different {what}; use a fresh output directory or resume=False"
        )


def run_experiment(config, seed, output_dir, workers=1, resume=True, progress=None):
    """Execute the full plan for ``config`` and ``seed`` into ``output_dir``.

    Writes ``config.json``, ``plan.json`` and ``results.csv``. With ``resume``
    an existing results file from the same config and plan is continued.
    ``progress(done, total)`` is called after every row.
    """
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers!r}")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    plan = make_plan(config, seed)
    config_text = config.dumps()
    plan_text = plan.dumps(config.sets)
    config_path, plan_path, results_path = out / CONFIG_FILE, out / PLAN_FILE, out / RESULTS_FILE

    done = 0
    if resume and results_path.exists():
        if config_path.exists():
            _check_same(config_path, config_text, "configuration")
        if plan_path.exists():
            _check_same(plan_path, plan_text, "plan")
        done, n_bytes = valid_prefix(results_path, plan.assignments)
        with open(results_path, "r+b") as fh:
            fh.truncate(n_bytes)
    else:
        results_path.write_bytes(b"")
        n_bytes = 0
    config_path.write_text(config_text, encoding="utf-8")
    plan_path.write_text(plan_text, encoding="utf-8")

    pending = plan.assignments[done:]
    total = len(plan.assignments)
    with open(results_path, "a", encoding="utf-8", newline="") as fh:
        if n_bytes == 0:
            fh.write(header_line())
            fh.flush()
        for values in _execute(config, pending, workers):
            fh.write(encode_line(values))
            fh.flush()
            done += 1
            if progress is not None:
                progress(done, total)
    return results_path


def _execute(config, items, workers):
    if workers == 1 or len(items) <= 1:
        for item in items:
            yield run_item(config, item)
        return
    config_json = config.to_json()
    chunk = max(1, len(items) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_run_packed, ((config_json, item) for item in items), chunksize=chunk)


def default_output_dir():
    """``$CRITRCT_OUTPUT_DIR`` if set, otherwise ``./runs``."""
    return Path(os.environ.get("CRITRCT_OUTPUT_DIR", "runs"))


__all__ = [
    "RESULT_COLUMNS",
    "make_plan",
    "run_item",
    "run_experiment",
    "valid_prefix",
    "parse_row",
    "row_checksum",
    "default_output_dir",
]
