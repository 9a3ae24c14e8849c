"""Pairwise comparisons against a control group, Finner adjustment, effect sizes,
and the full omnibus-then-post-hoc report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .omnibus import friedman, friedman_p, iman_davenport, rank_rows
from .tails import normal_tail

LARGE_EFFECT = 0.8


@dataclass
class PairwiseResult:
    label: str
    z: float
    raw_p: float
    adjusted_p: float = float("nan")
    rejected: bool = False
    effect_size: float | None = None

    @property
    def large_effect(self):
        return self.effect_size is not None and abs(self.effect_size) >= LARGE_EFFECT


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    metric: str
    n_designs: int
    n_inits: int
    chi2_f: float
    friedman_p: float
    f_id: float
    p_omnibus: float
    saturated: bool
    gamma: float
    control: str
    omnibus_rejected: bool
    pairwise: list | None = None
    note: str = ""
    mean_ranks: dict = field(default_factory=dict)

    def to_json(self):
        obj = {
            "metric": self.metric,
            "n_designs": self.n_designs,
            "n_inits": self.n_inits,
            "chi2_f": self.chi2_f,
            "friedman_p": self.friedman_p,
            "f_id": None if math.isinf(self.f_id) else self.f_id,
            "p_omnibus": self.p_omnibus,
            "saturated": self.saturated,
            "gamma": self.gamma,
            "control": self.control,
            "omnibus_rejected": self.omnibus_rejected,
            "mean_ranks": self.mean_ranks,
        }
        if self.pairwise is None:
            obj["pairwise"] = None
            obj["note"] = self.note
        else:
            obj["pairwise"] = [
                {
                    "label": r.label,
                    "z": r.z,
                    "raw_p": r.raw_p,
                    "adjusted_p": r.adjusted_p,
                    "rejected": r.rejected,
                    "effect_size": r.effect_size,
                    "large_effect": r.large_effect,
                }
                for r in self.pairwise
            ]
        return obj


def cohens_d(treatment, control):
    """``(mean(treatment) - mean(control)) / sd(control)``, ``None`` if ``sd == 0``.

    ``sd`` is the sample standard deviation (``ddof=1``).
    """
    treatment = np.asarray(treatment, dtype=np.float64)
    control = np.asarray(control, dtype=np.float64)
    sd = control.std(ddof=1)
    if not sd > 0:
        return None
    return float((treatment.mean() - control.mean()) / sd)


def pairwise_vs_control(ranks, control_label, matrix=None):
    """Rank-based z test of every group against ``control_label``.

    ``z = (Rbar_control - Rbar_a) / sqrt(k(k+1) / (6N))``; with rank 1 = best,
    negative ``z`` means the alternative did worse. Raw p-values are two-sided.
    Effect sizes need the raw values in ``matrix``.
    """
    labels = list(ranks.col_labels)
    if control_label not in labels:
        raise ValueError(f"control {control_label!r} not among {labels}")
    n, k = ranks.n_designs, ranks.n_groups
    se = math.sqrt(k * (k + 1) / (6.0 * n))
    r_control = ranks.mean_rank(control_label)
    control_values = matrix.column(control_label) if matrix is not None else None
    out = []
    for label in labels:
        if label == control_label:
            continue
        z = (r_control - ranks.mean_rank(label)) / se
        d = cohens_d(matrix.column(label), control_values) if matrix is not None else None
        out.append(PairwiseResult(label, float(z), normal_tail(z, two_sided=True), effect_size=d))
    return out


def finner_adjust(raw_p, gamma=0.95):
    """Finner step-down adjustment for ``m`` simultaneous tests.

    Sorted ascending, ``adj_i = max_{j<=i} min(1, 1 - (1 - p_j)^(m/j))``.
    A hypothesis is rejected when its adjusted p-value is below ``1 - gamma``,
    i.e. the rejected set is the longest prefix whose ``p_i < 1 - gamma^(i/m)``.
    Results come back in input order.
    """
    p = np.asarray(raw_p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("raw_p must be a non-empty sequence")
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise ValueError(f"p-values must lie in [0, 1], got {raw_p!r}")
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma!r}")
    m = p.size
    order = np.argsort(p, kind="stable")
    i = np.arange(1, m + 1)
    step = np.minimum(1.0, 1.0 - (1.0 - p[order]) ** (m / i))
    adjusted_sorted = np.maximum.accumulate(step)
    adjusted = np.empty(m)
    adjusted[order] = adjusted_sorted
    rejected = adjusted < 1.0 - gamma
    return adjusted, rejected


def finner_thresholds(m, gamma=0.95):
    """Step-down critical values ``1 - gamma^(i/m)`` for ``i = 1..m``."""
    return 1.0 - gamma ** (np.arange(1, m + 1) / m)


def analyze(matrix, control="C", gamma=0.95, higher_is_better=True, force_posthoc=False):
    """Friedman and Iman-Davenport omnibus test, then (if the omnibus test rejects
    at level ``1 - gamma``, or ``force_posthoc``) Finner-adjusted comparisons
    against ``control`` with Cohen's d effect sizes."""
    ranks = rank_rows(matrix, higher_is_better)
    chi2, df = friedman(ranks)
    n, k = matrix.shape
    idv = iman_davenport(chi2, n, k)
    rejected = idv.p_value < 1.0 - gamma
    report = TestReport(
        metric=matrix.metric_name,
        n_designs=n,
        n_inits=k,
        chi2_f=chi2,
        friedman_p=friedman_p(chi2, df),
        f_id=idv.f_id,
        p_omnibus=idv.p_value,
        saturated=idv.saturated,
        gamma=gamma,
        control=control,
        omnibus_rejected=rejected,
        mean_ranks={label: float(r) for label, r in zip(ranks.col_labels, ranks.mean_ranks)},
    )
    if not rejected and not force_posthoc:
        report.note = (
            f"omnibus test not rejected (p={idv.p_value:.4g} >= {1.0 - gamma:.4g}); "
            "post-hoc comparisons omitted"
        )
        return report
    pairs = pairwise_vs_control(ranks, control, matrix)
    adjusted, rej = finner_adjust([r.raw_p for r in pairs], gamma)
    for r, adj, flag in zip(pairs, adjusted, rej):
        r.adjusted_p = float(adj)
        r.rejected = bool(flag)
    report.pairwise = pairs
    return report
