"""Turn a results CSV into a design-by-group matrix, a test report and histogram data."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import IncompleteBlockError
from .runner import RESULT_COLUMNS, fmt, row_checksum
from .stats import ResultsMatrix, analyze

METRICS = ("tau_s", "tau_g")


def read_results(path):
    """Rows of a results CSV as dicts; every checksum must match."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"{path} does not start with the results header {RESULT_COLUMNS}")
        rows = []
        for lineno, values in enumerate(reader, start=2):
            if len(values) != len(RESULT_COLUMNS) or row_checksum(values[:-1]) != values[-1]:
                raise ValueError(f"{path}: line {lineno} is damaged (bad field count or checksum)")
            rows.append(dict(zip(RESULT_COLUMNS, values)))
    return rows


def results_matrix(rows, metric="tau_g", labels=None):
    """Design-by-group matrix of ``metric``.

    Groups appear in first-seen order unless ``labels`` is given; designs in
    ascending id order. Missing (design, group) cells raise
    :class:`IncompleteBlockError`; repeated cells raise ``ValueError``.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    cells = {}
    seen_labels = []
    for row in rows:
        key = (int(row["design_id"]), row["group_label"])
        if key in cells:
            raise ValueError(f"duplicate result for design {key[0]}, group {key[1]!r}")
        cells[key] = float(row[metric])
        if row["group_label"] not in seen_labels:
            seen_labels.append(row["group_label"])
    labels = list(labels) if labels is not None else seen_labels
    designs = sorted({d for d, _ in cells})
    missing = [(d, g) for d in designs for g in labels if (d, g) not in cells]
    if missing:
        raise IncompleteBlockError(missing)
    values = np.array([[cells[(d, g)] for g in labels] for d in designs])
    return ResultsMatrix(values, designs, labels, metric)


def histogram_rows(matrix, bins=20, lo=0.0, hi=1.0):
    """Per-group counts over equal bins of ``[lo, hi]``."""
    edges = np.linspace(lo, hi, bins + 1)
    out = []
    for label in matrix.col_labels:
        counts, _ = np.histogram(matrix.column(label), bins=edges)
        for left, right, count in zip(edges[:-1], edges[1:], counts):
            out.append((label, left, right, int(count)))
    return out


def write_histogram(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group_label", "bin_left", "bin_right", "count"])
        for label, left, right, count in rows:
            writer.writerow([label, fmt(left), fmt(right), count])


def analyze_results(path, metric="tau_g", control="C", gamma=0.95, output_dir=None, bins=20):
    """Run the omnibus and post-hoc tests on a results CSV.

    With ``output_dir`` the report goes to ``report_<metric>.json`` and the
    histogram data to ``hist_<metric>.csv`` there.
    """
    matrix = results_matrix(read_results(path), metric)
    report = analyze(matrix, control=control, gamma=gamma)
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"report_{metric}.json").write_text(
            json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8"
        )
        write_histogram(out / f"hist_{metric}.csv", histogram_rows(matrix, bins))
    return report, matrix
