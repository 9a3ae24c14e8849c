"""Row-wise ranking and the Friedman / Iman-Davenport omnibus tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tails import chi2_tail, f_tail


@dataclass(frozen=True)
class ResultsMatrix:
    """Metric values with one row per design and one column per group."""

    values: np.ndarray
    row_ids: tuple
    col_labels: tuple
    metric_name: str = "tau_g"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        if values.ndim != 2:
            raise ValueError(f"values must be a 2-D matrix, got shape {values.shape}")
        n, k = values.shape
        if n < 2 or k < 2:
            raise ValueError(f"need at least 2 designs and 2 groups, got {n} x {k}")
        if len(self.row_ids) != n or len(self.col_labels) != k:
            raise ValueError("row_ids / col_labels do not match the matrix shape")
        if len(set(self.col_labels)) != k:
            raise ValueError(f"duplicate column labels in {self.col_labels}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must all be finite")

    @property
    def shape(self):
        return self.values.shape

    def column(self, label):
        return self.values[:, self.col_labels.index(label)]


@dataclass(frozen=True)
class RankMatrix:
    ranks: np.ndarray
    mean_ranks: np.ndarray
    col_labels: tuple

    @property
    def n_designs(self):
        return self.ranks.shape[0]

    @property
    def n_groups(self):
        return self.ranks.shape[1]

    def mean_rank(self, label):
        return float(self.mean_ranks[self.col_labels.index(label)])


@dataclass(frozen=True)
class ImanDavenport:
    f_id: float
    df1: int
    df2: int
    p_value: float
    saturated: bool = False


def rank_rows(matrix, higher_is_better=True):
    """Rank each row, 1 = best; tied values share the average of their ranks."""
    x = matrix.values if isinstance(matrix, ResultsMatrix) else np.asarray(matrix, dtype=np.float64)
    labels = matrix.col_labels if isinstance(matrix, ResultsMatrix) else tuple(range(x.shape[1]))
    a = x[:, :, None]
    b = x[:, None, :]
    better = (b > a) if higher_is_better else (b < a)
    n_better = better.sum(axis=2)
    n_equal = (a == b).sum(axis=2)
    ranks = n_better + (n_equal + 1) / 2.0
    return RankMatrix(ranks, ranks.mean(axis=0), labels)


def friedman(ranks):
    """Friedman chi-square statistic and its degrees of freedom."""
    n, k = ranks.ranks.shape
    chi2 = 12.0 * n / (k * (k + 1)) * (np.sum(ranks.mean_ranks ** 2) - k * (k + 1) ** 2 / 4.0)
    return max(0.0, float(chi2)), k - 1


def friedman_p(chi2, df):
    return chi2_tail(chi2, df)


def iman_davenport(chi2_f, n_designs, n_inits):
    """F-distributed refinement of the Friedman statistic.

    When every design ranks the groups identically the denominator vanishes;
    that case returns ``p = 0`` with ``saturated=True``.
    """
    if chi2_f < 0:
        raise ValueError(f"chi2_f must be non-negative, got {chi2_f!r}")
    n, k = n_designs, n_inits
    df1, df2 = k - 1, (k - 1) * (n - 1)
    ceiling = n * (k - 1)
    denom = ceiling - chi2_f
    if denom < -1e-9 * ceiling:
        raise ValueError(f"chi2_f={chi2_f!r} exceeds its maximum {ceiling} for valid ranks")
    if denom <= 1e-12 * ceiling:
        return ImanDavenport(math.inf, df1, df2, 0.0, True)
    f_id = (n - 1) * chi2_f / denom
    return ImanDavenport(f_id, df1, df2, f_tail(f_id, df1, df2), False)
