"""Depth- and dropout-dependent candidate weight variances around criticality.

For a network of ``depth`` hidden layers, a weight variance ``sigma_w^2`` keeps the
forward variance inside the representable range up to the output layer when it
lies between :func:`sigma_alpha_bound` and :func:`sigma_beta_bound`. Candidates are
spread inside that interval: four on each side of the critical value with
logarithmically halving offsets (the right side mirrors the left), and two
extreme values far to the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConstructionError
from .meanfield import FloatLimits

__all__ = [
    "CandidateSet",
    "sigma_alpha_bound",
    "sigma_beta_bound",
    "generate_candidates",
    "candidate_labels",
]


def _check(theta, depth, nu0):
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {theta!r}")
    if depth < 2:
        raise ValueError(f"depth must be >= 2, got {depth!r}")
    if not nu0 > 0:
        raise ValueError(f"nu0 must be positive, got {nu0!r}")


def sigma_alpha_bound(theta, depth, nu0=1.0, limits=FloatLimits()):
    """Smallest weight variance whose signal does not underflow within ``depth`` layers."""
    _check(theta, depth, nu0)
    return 2.0 * (1.0 - theta) * math.exp(math.log(limits.alpha / nu0) / depth)


def sigma_beta_bound(theta, depth, nu0=1.0, limits=FloatLimits()):
    """Largest weight variance whose signal does not overflow within ``depth`` layers."""
    _check(theta, depth, nu0)
    return 2.0 * (1.0 - theta) * math.exp(math.log(limits.beta / nu0) / depth)


def candidate_labels(s_count=4, e_count=2):
    """Group labels in ascending order of weight variance, e.g. L4..L1, C, R1..R4, E1, E2."""
    return (
        [f"L{s}" for s in range(s_count, 0, -1)]
        + ["C"]
        + [f"R{s}" for s in range(1, s_count + 1)]
        + [f"E{e}" for e in range(1, e_count + 1)]
    )


@dataclass(frozen=True)
class CandidateSet:
    """Candidate weight variances for one (dropout rate, depth) pair.

    ``left`` is ordered L4 < ... < L1, ``right`` R1 < ... < R4 and ``extreme``
    E1 < E2 (for the default counts).
    """

    theta: float
    depth: int
    left: tuple
    critical: float
    right: tuple
    extreme: tuple

    @property
    def labels(self):
        return candidate_labels(len(self.right), len(self.extreme))

    @property
    def values(self):
        return list(self.left) + [self.critical] + list(self.right) + list(self.extreme)

    def as_dict(self):
        return dict(zip(self.labels, self.values))

    def __getitem__(self, label):
        return self.as_dict()[label]


def generate_candidates(
    theta,
    depth,
    s_count=4,
    e_count=2,
    nu0=1.0,
    limits=FloatLimits(),
    safety=0.9,
    extreme_rule="offset",
):
    """Build the candidate set for a network with ``depth`` hidden layers.

    Left of criticality the outermost candidate ``L{s_count}`` sits at ``safety`` of
    the way from ``C`` down to ``sigma_alpha`` and each step inwards halves the
    offset, so ``L1`` is closest to ``C``. The right side reflects these about ``C``. The outermost extreme sits at ``safety`` of the
    way from ``C`` to ``sigma_beta`` and each inner extreme halves that offset
    (``extreme_rule="offset"``, which reproduces the published example table).
    ``extreme_rule="halving"`` instead places the outermost extreme at
    ``safety * sigma_beta`` and halves the value itself.
    """
    _check(theta, depth, nu0)
    if s_count < 1 or e_count < 0:
        raise ValueError(f"need s_count >= 1 and e_count >= 0, got {s_count}, {e_count}")
    critical = 2.0 * (1.0 - theta)
    lower = sigma_alpha_bound(theta, depth, nu0, limits)
    upper = sigma_beta_bound(theta, depth, nu0, limits)
    if lower >= critical or upper <= critical:
        raise ConstructionError(
            f"degenerate bounds ({lower!r}, {upper!r}) around critical {critical!r}"
        )

    gap = critical - lower
    # offsets from C, outermost first: L{s_count} .. L1
    offsets = [safety / 2 ** k * gap for k in range(s_count)]
    left = tuple(critical - off for off in offsets)
    right = tuple(critical + off for off in reversed(offsets))

    if extreme_rule == "offset":
        span = upper - critical
        extreme = tuple(critical + safety / 2 ** (e_count - e) * span for e in range(1, e_count + 1))
    elif extreme_rule == "halving":
        extreme = tuple(safety * upper / 2 ** (e_count - e) for e in range(1, e_count + 1))
    else:
        raise ValueError(f"unknown extreme_rule {extreme_rule!r}")

    if extreme and extreme[0] <= right[-1]:
        raise ConstructionError(
            f"extreme candidate {extreme[0]!r} does not exceed core candidate {right[-1]!r}"
        )
    return CandidateSet(theta, depth, left, critical, right, extreme)
