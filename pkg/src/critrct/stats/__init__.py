"""Nonparametric comparison of several groups over a common set of designs."""

from .omnibus import (
    ImanDavenport,
    RankMatrix,
    ResultsMatrix,
    friedman,
    friedman_p,
    iman_davenport,
    rank_rows,
)
from .posthoc import (
    LARGE_EFFECT,
    PairwiseResult,
    TestReport,
    analyze,
    cohens_d,
    finner_adjust,
    finner_thresholds,
    pairwise_vs_control,
)
from .tails import beta_inc, chi2_tail, f_tail, gamma_p, gamma_q, normal_tail

__all__ = [
    "ImanDavenport",
    "RankMatrix",
    "ResultsMatrix",
    "friedman",
    "friedman_p",
    "iman_davenport",
    "rank_rows",
    "LARGE_EFFECT",
    "PairwiseResult",
    "TestReport",
    "analyze",
    "cohens_d",
    "finner_adjust",
    "finner_thresholds",
    "pairwise_vs_control",
    "beta_inc",
    "chi2_tail",
    "f_tail",
    "gamma_p",
    "gamma_q",
    "normal_tail",
]
