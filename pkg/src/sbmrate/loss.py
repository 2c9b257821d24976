"""Mis-match losses between community assignments.

The mis-match ratio is the fraction of disagreeing nodes after the best
bijective relabeling of the second assignment's communities:

    r(sigma, sigma_hat) = min_delta d_H(sigma, delta o sigma_hat) / n

All losses are computed in exact integer / rational arithmetic so the
identity tests (e.g. the mis-match ratio equals the average per-node
loss) hold exactly; callers convert to float at reporting boundaries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Assignment

__all__ = [
    "Confusion",
    "hamming",
    "class_distance",
    "mismatch_ratio",
    "local_loss",
    "alpha_gamma",
    "MAX_ENUM_K",
]

# Above this K the K! enumeration of label bijections is replaced by
# optimal matching in class_distance; local_loss refuses outright.
MAX_ENUM_K = 8


@dataclass(frozen=True)
class Confusion:
    """K x K contingency table between two assignments.

    counts[k-1, k'-1] = |{i : sigma_hat(i) = k and sigma(i) = k'}|.
    Row sums are sigma_hat's community sizes, column sums sigma's,
    and the grand total is n.
    """

    counts: np.ndarray

    @staticmethod
    def from_assignments(sigma_hat: Assignment, sigma: Assignment) -> "Confusion":
        _check_pair(sigma_hat, sigma)
        k = sigma_hat.k
        counts = np.zeros((k, k), dtype=np.int64)
        np.add.at(counts, (sigma_hat.as_array() - 1, sigma.as_array() - 1), 1)
        counts.flags.writeable = False
        return Confusion(counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def _check_pair(s1: Assignment, s2: Assignment) -> None:
    if s1.n != s2.n:
        raise ValueError(f"length mismatch: {s1.n} vs {s2.n}")
    if s1.k != s2.k:
        raise ValueError(f"K mismatch: {s1.k} vs {s2.k}")


def hamming(sigma1: Assignment, sigma2: Assignment) -> int:
    """Number of positions where the two label vectors differ."""
    if sigma1.n != sigma2.n:
        raise ValueError(f"length mismatch: {sigma1.n} vs {sigma2.n}")
    return int(np.count_nonzero(sigma1.as_array() != sigma2.as_array()))


def _max_trace_enum(conf: np.ndarray, k: int) -> tuple[int, tuple[int, ...]]:
    best_trace = -1
    best_perm: tuple[int, ...] = tuple(range(1, k + 1))
    for perm in itertools.permutations(range(k)):
        trace = int(sum(conf[row, perm[row]] for row in range(k)))
        if trace > best_trace:
            best_trace = trace
            best_perm = tuple(p + 1 for p in perm)
    return best_trace, best_perm


def _max_trace_matching(conf: np.ndarray, k: int) -> tuple[int, tuple[int, ...]]:
    rows, cols = linear_sum_assignment(conf, maximize=True)
    trace = int(conf[rows, cols].sum())
    delta = [0] * k
    for r, c in zip(rows, cols):
        delta[r] = c + 1
    return trace, tuple(delta)


def class_distance(
    sigma1: Assignment, sigma2: Assignment, force_matching: bool = False
) -> tuple[int, tuple[int, ...]]:
    """Distance between the equivalence classes of two assignments.

    d = min over label bijections delta of d_H(sigma1, delta o sigma2),
    which equals n minus the maximum trace of the confusion table over
    bijections.  Returns (d, delta) where delta[k-1] is the new label
    assigned to sigma2's label k by one minimizer.

    Exhaustive over the K! bijections for K <= MAX_ENUM_K; optimal
    bipartite matching on the confusion table above that (or when
    `force_matching` is set).  Both paths compute the same distance and
    are tested against each other at small K.
    """
    _check_pair(sigma1, sigma2)
    conf = Confusion.from_assignments(sigma2, sigma1).counts  # rows: sigma2 labels
    k = sigma1.k
    if k <= MAX_ENUM_K and not force_matching:
        trace, delta = _max_trace_enum(conf, k)
    else:
        trace, delta = _max_trace_matching(conf, k)
    return sigma1.n - trace, delta


def mismatch_ratio(sigma: Assignment, sigma_hat: Assignment) -> Fraction:
    """Proportion of nodes incorrectly clustered, minimized over relabelings.

    Exact rational; use float() for a floating rendering.
    """
    d, _ = class_distance(sigma, sigma_hat)
    return Fraction(d, sigma.n)


def _minimizer_set(sigma: Assignment, sigma_hat: Assignment) -> list[tuple[int, ...]]:
    """All distinct relabelings of sigma_hat at minimum Hamming distance from sigma."""
    k = sigma.k
    if k > MAX_ENUM_K:
        raise ValueError(
            f"local loss requires enumerating all K! label bijections; K={k} exceeds {MAX_ENUM_K}"
        )
    lab = sigma.as_array()
    hat = sigma_hat.as_array()
    best = sigma.n + 1
    minimizers: dict[tuple[int, ...], None] = {}
    for perm in itertools.permutations(range(1, k + 1)):
        relabeled = tuple(perm[x - 1] for x in hat)
        d = int(np.count_nonzero(lab != np.asarray(relabeled)))
        if d < best:
            best = d
            minimizers = {relabeled: None}
        elif d == best:
            minimizers[relabeled] = None  # distinct assignments only
    return list(minimizers)


def local_loss(sigma: Assignment, sigma_hat: Assignment, i: int) -> Fraction:
    """Per-node loss of sigma_hat at node i against the truth sigma.

    Averages the disagreement indicator at node i over the set
    S = {delta o sigma_hat : d_H(sigma, delta o sigma_hat) is minimal},
    counting distinct assignments once.  Exact rational in [0, 1].
    """
    _check_pair(sigma, sigma_hat)
    if not (0 <= i < sigma.n):
        raise ValueError(f"node index {i} out of range for n={sigma.n}")
    minimizers = _minimizer_set(sigma, sigma_hat)
    wrong = sum(1 for m in minimizers if m[i] != sigma.labels[i])
    return Fraction(wrong, len(minimizers))


def alpha_gamma(sigma: Assignment, sigma0: Assignment) -> tuple[int, int]:
    """Pair-disagreement counts between a candidate and the truth.

    alpha = #{(i, j), i < j : sigma0 puts them together, sigma splits them}
    gamma = #{(i, j), i < j : sigma0 splits them, sigma puts them together}

    Swapping the arguments swaps the two counts.
    """
    if sigma.n != sigma0.n:
        raise ValueError(f"length mismatch: {sigma.n} vs {sigma0.n}")
    lab = sigma.as_array()
    lab0 = sigma0.as_array()
    same = lab[:, None] == lab[None, :]
    same0 = lab0[:, None] == lab0[None, :]
    upper = np.triu(np.ones_like(same, dtype=bool), 1)
    alpha = int(np.count_nonzero(same0 & ~same & upper))
    gamma = int(np.count_nonzero(~same0 & same & upper))
    return alpha, gamma


def pair_counts_from_sizes(sizes: Sequence[int]) -> int:
    """Number of within-community pairs sum_k C(n_k, 2)."""
    return sum(s * (s - 1) // 2 for s in sizes)
