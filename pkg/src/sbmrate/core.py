"""Domain types for block-structured random graphs.

Conventions used throughout the package:

- A community assignment maps node i (0-based index) to a label in
  {1, ..., K}.  Labels are 1-based in memory; text serialization is
  0-based (see `fileio`).
- A graph is a symmetric, zero-diagonal, binary adjacency matrix.
- Model rates are given as numerators: the within-community edge
  probability is a/n and the between-community probability is b/n.
- The imbalance factor beta >= 1 bounds community sizes to the
  interval [n/(beta*K), beta*n/K].

Boundary comparisons against beta- and delta-scaled size limits are done
in exact rational arithmetic (on the binary values of the floats), so a
size sitting exactly on a bound does not flip with rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Assignment",
    "Graph",
    "ModelParams",
    "SpaceVariant",
    "SpaceKind",
    "MembershipReport",
    "renyi_divergence",
    "check_membership",
]


@dataclass(frozen=True)
class Assignment:
    """A community assignment: node i carries labels[i] in {1..K}."""

    labels: tuple[int, ...]
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        bad = [x for x in self.labels if not (1 <= x <= self.k)]
        if bad:
            raise ValueError(f"labels must lie in 1..{self.k}; offending values {bad[:5]}")

    @property
    def n(self) -> int:
        return len(self.labels)

    def sizes(self) -> tuple[int, ...]:
        """Community sizes (n_1, ..., n_K); they sum to n."""
        counts = np.bincount(np.asarray(self.labels), minlength=self.k + 1)
        return tuple(int(c) for c in counts[1:])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def relabel(self, delta: Sequence[int]) -> "Assignment":
        """Compose with a label bijection: new label of k is delta[k-1]."""
        if sorted(delta) != list(range(1, self.k + 1)):
            raise ValueError("delta must be a bijection of 1..K")
        return Assignment(tuple(delta[x - 1] for x in self.labels), self.k)

    def permute_nodes(self, pi: Sequence[int]) -> "Assignment":
        """Node permutation: new assignment at position i is labels[pi^{-1}(i)].

        `pi` is given as a 0-based permutation of range(n), pi[old] = new.
        """
        if sorted(pi) != list(range(self.n)):
            raise ValueError("pi must be a permutation of range(n)")
        out = [0] * self.n
        for old, new in enumerate(pi):
            out[new] = self.labels[old]
        return Assignment(tuple(out), self.k)

    @staticmethod
    def from_labels(labels: Sequence[int], k: Optional[int] = None) -> "Assignment":
        labels = tuple(int(x) for x in labels)
        if k is None:
            k = max(labels) if labels else 1
        return Assignment(labels, k)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph as a dense 0/1 adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.diag(a).any():
            raise ValueError("self-loops are not allowed (diagonal must be zero)")
        if not (a == a.T).all():
            raise ValueError("adjacency must be symmetric")
        a = a.astype(np.uint8, copy=True)
        a.flags.writeable = False
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        """Sorted list of edges (i, j) with 0-based endpoints, i < j."""
        ii, jj = np.nonzero(np.triu(self.adjacency, 1))
        return sorted(zip(ii.tolist(), jj.tolist()))

    def permute_nodes(self, pi: Sequence[int]) -> "Graph":
        """Relocated graph: entry (i, j) becomes old entry (pi^{-1}(i), pi^{-1}(j))."""
        inv = np.empty(self.n, dtype=np.int64)
        inv[np.asarray(pi)] = np.arange(self.n)
        return Graph(self.adjacency[np.ix_(inv, inv)])


@dataclass(frozen=True)
class ModelParams:
    """Block model parameters.

    Within-community probability a/n, between-community probability b/n,
    size imbalance beta, and an optional full probability matrix `theta`
    for inhomogeneous models.  `eps` is the margin enforced by
    validation: b >= eps and a/n <= 1 - eps.

    `validate=False` bypasses the rate-margin checks; it exists so the
    degenerate corner (a=n, b=0) can be used in sampler oracle tests.
    """

    n: int
    k: int
    a: float
    b: float
    beta: float = 1.0
    theta: Optional[np.ndarray] = None
    eps: float = 0.01
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.n < 2 or self.k < 1 or self.k > self.n:
            raise ValueError(f"need 2 <= n and 1 <= K <= n, got n={self.n}, K={self.k}")
        if self.beta < 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.validate:
            if not (0 < self.b < self.a < self.n):
                raise ValueError(
                    f"rates must satisfy 0 < b < a < n, got a={self.a}, b={self.b}, n={self.n}"
                )
            if self.a / self.n > 1 - self.eps:
                raise ValueError(f"a/n = {self.a / self.n} exceeds 1 - eps = {1 - self.eps}")
            if self.b < self.eps:
                raise ValueError(f"b = {self.b} is below eps = {self.eps}")
        else:
            if not (0 <= self.b <= self.a <= self.n):
                raise ValueError("even unchecked rates must satisfy 0 <= b <= a <= n")
        if self.theta is not None:
            th = np.asarray(self.theta, dtype=float)
            if th.shape != (self.n, self.n):
                raise ValueError(f"theta must be {self.n}x{self.n}, got {th.shape}")
            if np.diag(th).any():
                raise ValueError("theta must have zero diagonal")
            if not np.allclose(th, th.T, rtol=0, atol=0):
                raise ValueError("theta must be symmetric")
            if th.min() < 0 or th.max() > 1:
                raise ValueError("theta entries must lie in [0, 1]")
            th = th.copy()
            th.flags.writeable = False
            object.__setattr__(self, "theta", th)

    @property
    def p_within(self) -> float:
        return self.a / self.n

    @property
    def p_between(self) -> float:
        return self.b / self.n

    def check_theta_compatible(self, sigma: Assignment) -> None:
        """Check theta against a companion assignment.

        Requires theta[i,j] >= a/n on within-community pairs and
        theta[i,j] <= b/n on between-community pairs.
        """
        if self.theta is None:
            return
        lab = sigma.as_array()
        same = lab[:, None] == lab[None, :]
        np.fill_diagonal(same, False)
        off = ~np.eye(self.n, dtype=bool)
        if (self.theta[same] < self.p_within - 1e-12).any():
            raise ValueError("theta below a/n on a within-community pair")
        if (self.theta[off & ~same] > self.p_between + 1e-12).any():
            raise ValueError("theta above b/n on a between-community pair")


class SpaceVariant(enum.Enum):
    """Which family of assignment spaces a size constraint refers to."""

    GENERAL = "general"            # sizes in [n/(beta*K), beta*n/K]
    HOMOGENEOUS = "homogeneous"    # same size constraints; rates exactly a/n, b/n
    EQUAL_SIZE = "equal_size"      # |n_k - n/K| <= delta * n/K
    LEAST_FAVORABLE = "least_favorable"  # sizes match the hardest-profile construction


@dataclass(frozen=True)
class SpaceKind:
    """A space variant together with its slack parameter.

    `delta` only applies to EQUAL_SIZE.  The GENERAL / HOMOGENEOUS bounds
    take beta from the model parameters at the point of use.
    """

    variant: SpaceVariant
    delta: float = 0.1

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    @staticmethod
    def general() -> "SpaceKind":
        return SpaceKind(SpaceVariant.GENERAL)

    @staticmethod
    def homogeneous() -> "SpaceKind":
        return SpaceKind(SpaceVariant.HOMOGENEOUS)

    @staticmethod
    def equal_size(delta: float = 0.1) -> "SpaceKind":
        return SpaceKind(SpaceVariant.EQUAL_SIZE, delta)

    @staticmethod
    def least_favorable() -> "SpaceKind":
        return SpaceKind(SpaceVariant.LEAST_FAVORABLE)


@dataclass(frozen=True)
class MembershipReport:
    ok: bool
    violations: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def renyi_divergence(a: float, b: float, n: float) -> float:
    """Order-1/2 Renyi divergence between Ber(a/n) and Ber(b/n).

    I = -2 * log( sqrt((a/n)(b/n)) + sqrt(1 - a/n) * sqrt(1 - b/n) )

    Nonnegative, zero iff a == b.  Square roots are taken factor by
    factor so products of small rates do not underflow.
    """
    if b < 0 or a > n:
        raise ValueError(f"need 0 <= b <= a <= n, got a={a}, b={b}, n={n}")
    if b > a:
        raise ValueError(f"need b <= a, got a={a}, b={b}")
    if a == b:
        return 0.0
    p = a / n
    q = b / n
    s = math.sqrt(p) * math.sqrt(q) + math.sqrt(1.0 - p) * math.sqrt(1.0 - q)
    if s <= 0.0:
        raise ValueError("degenerate pair (a=n, b=0): the log argument is 0")
    return -2.0 * math.log(s)


def _size_interval(n: int, k: int, kind: SpaceKind, beta: float) -> tuple[Fraction, Fraction]:
    """Exact rational size bounds [lo, hi] for interval-type spaces."""
    if kind.variant in (SpaceVariant.GENERAL, SpaceVariant.HOMOGENEOUS):
        if math.isinf(beta):
            return Fraction(1), Fraction(n)
        bf = Fraction(beta)
        return Fraction(n) / (bf * k), bf * Fraction(n) / k
    if kind.variant is SpaceVariant.EQUAL_SIZE:
        df = Fraction(kind.delta)
        base = Fraction(n, k)
        return base * (1 - df), base * (1 + df)
    raise ValueError(f"no interval bounds for {kind.variant}")


def check_membership(sigma: Assignment, params: ModelParams, kind: SpaceKind) -> MembershipReport:
    """Check the size constraints of the requested space against sigma.

    Violated constraints are listed one per entry in the report.
    Invariant under relabeling of communities (only sizes matter).
    """
    if sigma.n != params.n:
        raise ValueError(f"assignment length {sigma.n} != params.n {params.n}")
    if sigma.k != params.k:
        raise ValueError(f"assignment K {sigma.k} != params.k {params.k}")
    sizes = sigma.sizes()
    violations: list[str] = []
    if kind.variant is SpaceVariant.LEAST_FAVORABLE:
        from .bounds import construct_least_favorable

        profiles = construct_least_favorable(params.n, params.k).profiles
        got = tuple(sorted(sizes))
        if got not in profiles:
            violations.append(
                f"size profile {got} not among least-favorable profiles {profiles}"
            )
    else:
        lo, hi = _size_interval(params.n, params.k, kind, params.beta)
        for idx, s in enumerate(sizes, start=1):
            if Fraction(s) < lo:
                violations.append(f"n_{idx} = {s} < lower bound {float(lo):.6g}")
            if Fraction(s) > hi:
                violations.append(f"n_{idx} = {s} > upper bound {float(hi):.6g}")
    return MembershipReport(ok=not violations, violations=tuple(violations))
