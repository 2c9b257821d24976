"""Sampling of assignments and adjacency matrices.

Graphs: each upper-triangle entry is an independent Bernoulli draw with
the probability dictated by the endpoint labels (or by an explicit
theta matrix); the matrix is then mirrored, so symmetry and the zero
diagonal hold by construction.

Assignments: uniform over all labeled assignments whose community sizes
satisfy the requested space; sampling first picks an ordered size
composition with probability proportional to its multinomial weight
(exact integer arithmetic), then places nodes by a random permutation.

Everything is a pure function of (inputs, generator state): re-seeding
the generator reproduces the draw bit for bit.
"""

from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache

import numpy as np

from .core import Assignment, Graph, ModelParams, SpaceKind, SpaceVariant, _size_interval

__all__ = ["sample_graph", "sample_assignment", "InfeasibleSpaceError"]


class InfeasibleSpaceError(ValueError):
    """The requested space contains no assignment at these (n, K)."""


def sample_graph(
    sigma: Assignment,
    params: ModelParams,
    rng: np.random.Generator,
) -> Graph:
    """Draw an adjacency matrix from the block model at sigma.

    Uses params.theta when present, otherwise the homogeneous rates
    a/n within and b/n between.  The degenerate corner (a=n, b=0) is
    reachable through ModelParams(validate=False) and yields a disjoint
    union of complete graphs, which the oracle tests rely on.
    """
    n = params.n
    if sigma.n != n:
        raise ValueError(f"assignment length {sigma.n} != params.n {n}")
    if params.theta is not None:
        params.check_theta_compatible(sigma)
        probs = np.asarray(params.theta, dtype=float)
    else:
        lab = sigma.as_array()
        same = lab[:, None] == lab[None, :]
        probs = np.where(same, params.p_within, params.p_between)
    upper = np.triu(rng.random((n, n)) < probs, 1)
    adj = (upper | upper.T).astype(np.uint8)
    return Graph(adj)


# ---------------------------------------------------------------------------
# uniform assignment sampling
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _composition_counts(n: int, k: int, lo: int, hi: int) -> tuple[int, ...]:
    """count[t] (t = 0..n) of labeled assignments of t nodes into k ordered
    communities, each of size in [lo, hi]."""
    if k == 0:
        return tuple(1 if t == 0 else 0 for t in range(n + 1))
    prev = _composition_counts(n, k - 1, lo, hi)
    out = []
    for t in range(n + 1):
        total = 0
        for s in range(lo, min(hi, t) + 1):
            total += math.comb(t, s) * prev[t - s]
        out.append(total)
    return tuple(out)


def _sample_interval_sizes(
    n: int, k: int, lo: int, hi: int, rng: np.random.Generator
) -> list[int]:
    """Ordered size composition, weighted by multinomial coefficients."""
    counts = _composition_counts(n, k, lo, hi)
    if counts[n] == 0:
        raise InfeasibleSpaceError(
            f"no size profile with {k} communities of size in [{lo}, {hi}] sums to {n}"
        )
    sizes = []
    t = n
    for j in range(k, 0, -1):
        sub = _composition_counts(n, j - 1, lo, hi)
        weights = []
        support = list(range(lo, min(hi, t) + 1))
        for s in support:
            weights.append(math.comb(t, s) * sub[t - s])
        s = support[_weighted_index(weights, rng)]
        sizes.append(s)
        t -= s
    assert t == 0
    return sizes


def _weighted_index(weights: list[int], rng: np.random.Generator) -> int:
    """Index drawn with probability weight/total, exact over big integers."""
    total = sum(weights)
    if total <= 0:
        raise InfeasibleSpaceError("no admissible size profile")
    # 53 random bits at a time to form a uniform integer in [0, total)
    draw = _randint_below(total, rng)
    acc = 0
    for i, w in enumerate(weights):
        acc += w
        if draw < acc:
            return i
    return len(weights) - 1


def _randint_below(total: int, rng: np.random.Generator) -> int:
    bits = total.bit_length()
    while True:
        value = 0
        remaining = bits
        while remaining > 0:
            chunk = min(remaining, 53)
            value = (value << chunk) | int(rng.integers(0, 1 << chunk))
            remaining -= chunk
        if value < total:
            return value


def _profile_weight(n: int, profile: tuple[int, ...]) -> int:
    """Number of labeled assignments with this unordered size profile."""
    ordered = math.factorial(n)
    for s in profile:
        ordered //= math.factorial(s)
    distinct_orderings = math.factorial(len(profile))
    for mult in Counter(profile).values():
        distinct_orderings //= math.factorial(mult)
    return ordered * distinct_orderings


def sample_assignment(
    params: ModelParams, kind: SpaceKind, rng: np.random.Generator
) -> Assignment:
    """Uniform draw over the labeled assignments admitted by the space."""
    n, k = params.n, params.k
    if kind.variant is SpaceVariant.LEAST_FAVORABLE:
        from .bounds import construct_least_favorable

        profiles = construct_least_favorable(n, k).profiles
        weights = [_profile_weight(n, p) for p in profiles]
        profile = profiles[_weighted_index(weights, rng)]
        sizes = list(profile)
        # a uniform shuffle of the multiset makes each distinct ordered
        # profile equally likely
        order = rng.permutation(k)
        sizes = [sizes[i] for i in order]
    else:
        lo_f, hi_f = _size_interval(n, k, kind, params.beta)
        lo = max(1, math.ceil(lo_f))
        hi = min(n, math.floor(hi_f))
        if lo > hi or hi * k < n or lo * k > n:
            raise InfeasibleSpaceError(
                f"sizes in [{lo}, {hi}] for K={k} communities cannot sum to n={n}"
            )
        sizes = _sample_interval_sizes(n, k, lo, hi, rng)
    placement = rng.permutation(n)
    labels = [0] * n
    pos = 0
    for label, s in enumerate(sizes, start=1):
        for node in placement[pos : pos + s]:
            labels[int(node)] = label
        pos += s
    return Assignment(tuple(labels), k)
