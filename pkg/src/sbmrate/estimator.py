"""Penalized likelihood objective and solvers.

The objective scored over assignments is

    T(sigma) = sum_{i<j} A_{ij} 1{sigma(i)=sigma(j)} - lambda * sum_{i<j} 1{sigma(i)=sigma(j)}

with the penalty threshold lambda derived from the model rates so that
b/n < lambda < a/n.  Two constructions are provided: the likelihood
ratio form, and a weighted family parameterized by w in [0, 1] built
from the mgf-minimizing tilt t*; the two coincide at w = 1/2.

Optimization is over one canonical representative per equivalence class
of assignments (labels renumbered by first occurrence), restricted to a
size-constrained space.  Exhaustive search refuses, rather than
truncates, when the class count exceeds the cap.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import Assignment, Graph, ModelParams, SpaceKind, SpaceVariant, _size_interval
from .loss import pair_counts_from_sizes

__all__ = [
    "Penalty",
    "t_star",
    "lambda_unified",
    "lambda_weighted",
    "objective",
    "enumerate_classes",
    "count_classes",
    "solve_exhaustive",
    "solve_greedy",
    "ExhaustiveResult",
    "EnumerationCapError",
    "DEFAULT_CLASS_CAP",
]

DEFAULT_CLASS_CAP = 10_000_000


class EnumerationCapError(RuntimeError):
    """Raised when an exhaustive search would exceed the class cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(
            f"exhaustive search refused: {count} equivalence classes exceed the cap of {cap}"
        )
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class Penalty:
    """Penalty threshold lambda with its weight w and tilt t*."""

    lam: float
    w: float
    t_star: float

    def __post_init__(self):
        if not (0.0 <= self.w <= 1.0):
            raise ValueError(f"w must lie in [0, 1], got {self.w}")
        if not math.isfinite(self.lam):
            raise ValueError(f"lambda must be finite, got {self.lam}")


def _check_rates(a: float, b: float, n: float) -> None:
    if not (0 < b < a < n):
        raise ValueError(f"rates must satisfy 0 < b < a < n, got a={a}, b={b}, n={n}")


def t_star(a: float, b: float, n: float) -> float:
    """Positive tilt minimizing the mgf of X - Y, X ~ Ber(b/n), Y ~ Ber(a/n).

    t* = (1/2) * log( a (1 - b/n) / (b (1 - a/n)) )
    """
    _check_rates(a, b, n)
    return 0.5 * math.log((a * (1.0 - b / n)) / (b * (1.0 - a / n)))


def _bracket_check(lam: float, a: float, b: float, n: float) -> None:
    if not (b / n < lam < a / n):
        raise ValueError(f"penalty lambda={lam} falls outside (b/n, a/n) = ({b / n}, {a / n})")


def lambda_unified(a: float, b: float, n: float) -> Penalty:
    """Likelihood-ratio penalty, valid for every K >= 2.

    lambda = log((1 - b/n) / (1 - a/n)) / log( a (1 - b/n) / (b (1 - a/n)) )
    """
    _check_rates(a, b, n)
    p, q = a / n, b / n
    lam = math.log((1.0 - q) / (1.0 - p)) / math.log((a * (1.0 - q)) / (b * (1.0 - p)))
    _bracket_check(lam, a, b, n)
    return Penalty(lam=lam, w=0.5, t_star=t_star(a, b, n))


def lambda_weighted(a: float, b: float, n: float, w: float, k: Optional[int] = None) -> Penalty:
    """Weighted penalty family built from the tilt t*.

    lambda = -(w/t*) log((a/n) e^{-t*} + 1 - a/n)
             + ((1-w)/t*) log((b/n) e^{t*} + 1 - b/n)

    The weighted family applies for K >= 3; for K = 2 only the w = 1/2
    member is defined, so a declared k=2 rejects other weights.
    """
    _check_rates(a, b, n)
    if not (0.0 <= w <= 1.0):
        raise ValueError(f"w must lie in [0, 1], got {w}")
    if k == 2 and w != 0.5:
        raise ValueError("for K=2 the penalty family only provides w = 1/2")
    ts = t_star(a, b, n)
    p, q = a / n, b / n
    lam = -(w / ts) * math.log(p * math.exp(-ts) + 1.0 - p) + ((1.0 - w) / ts) * math.log(
        q * math.exp(ts) + 1.0 - q
    )
    _bracket_check(lam, a, b, n)
    return Penalty(lam=lam, w=w, t_star=ts)


def objective(graph: Graph, sigma: Assignment, penalty: Penalty) -> float:
    """Exact value of T(sigma) = within-edges - lambda * within-pairs."""
    if graph.n != sigma.n:
        raise ValueError(f"graph has {graph.n} nodes but assignment has {sigma.n}")
    lab = sigma.as_array()
    same = lab[:, None] == lab[None, :]
    within_edges = int(graph.adjacency[same].sum()) // 2
    within_pairs = pair_counts_from_sizes(sigma.sizes())
    return within_edges - penalty.lam * within_pairs


# ---------------------------------------------------------------------------
# size-constrained enumeration of canonical class representatives
# ---------------------------------------------------------------------------


class _IntervalConstraint:
    """Every community size must land in [lo, hi] (integers)."""

    def __init__(self, n: int, k: int, lo: int, hi: int):
        self.n, self.k, self.lo, self.hi = n, k, lo, hi

    def key(self):
        return ("interval", self.n, self.k, self.lo, self.hi)

    def feasible(self, sizes: list[int], rem: int) -> bool:
        b = len(sizes)
        if b > self.k or max(sizes) > self.hi:
            return False
        need = sum(max(0, self.lo - s) for s in sizes) + (self.k - b) * self.lo
        room = sum(self.hi - s for s in sizes) + (self.k - b) * self.hi
        return need <= rem <= room

    def final_ok(self, sizes: Sequence[int]) -> bool:
        return len(sizes) == self.k and all(self.lo <= s <= self.hi for s in sizes)

    def size_multisets(self) -> Iterator[tuple[int, ...]]:
        """All sorted size profiles (s_1 <= ... <= s_K) summing to n."""

        def gen(remaining: int, parts: int, minimum: int) -> Iterator[tuple[int, ...]]:
            if parts == 1:
                if minimum <= remaining <= self.hi and remaining >= self.lo:
                    yield (remaining,)
                return
            for s in range(max(minimum, self.lo), min(self.hi, remaining - (parts - 1)) + 1):
                for rest in gen(remaining - s, parts - 1, s):
                    yield (s,) + rest

        yield from gen(self.n, self.k, 1)


class _ProfileConstraint:
    """Community size multiset must equal one of the given profiles."""

    def __init__(self, n: int, k: int, profiles: Sequence[tuple[int, ...]]):
        self.n, self.k = n, k
        self.profiles = tuple(tuple(sorted(p)) for p in profiles)

    def key(self):
        return ("profiles", self.n, self.k, self.profiles)

    @staticmethod
    def _matchable(sizes_sorted: list[int], profile: tuple[int, ...]) -> bool:
        # greedy interval matching: smallest unmatched size into the
        # smallest slot that fits; exact because constraints are one-sided
        i = 0
        for slot in profile:
            if i < len(sizes_sorted) and sizes_sorted[i] <= slot:
                i += 1
        return i == len(sizes_sorted)

    def feasible(self, sizes: list[int], rem: int) -> bool:
        if len(sizes) > self.k:
            return False
        srt = sorted(sizes)
        return any(self._matchable(srt, p) for p in self.profiles)

    def final_ok(self, sizes: Sequence[int]) -> bool:
        return len(sizes) == self.k and tuple(sorted(sizes)) in self.profiles

    def size_multisets(self) -> Iterator[tuple[int, ...]]:
        yield from self.profiles


def _constraint_for(n: int, k: int, kind: SpaceKind, beta: float):
    if kind.variant is SpaceVariant.LEAST_FAVORABLE:
        from .bounds import construct_least_favorable

        return _ProfileConstraint(n, k, construct_least_favorable(n, k).profiles)
    lo_f, hi_f = _size_interval(n, k, kind, beta)
    lo = max(1, math.ceil(lo_f))
    hi = min(n, math.floor(hi_f))
    return _IntervalConstraint(n, k, lo, hi)


def _enumerate_label_tuples(n: int, k: int, constraint) -> Iterator[tuple[int, ...]]:
    labels = [0] * n
    sizes: list[int] = []

    def rec(pos: int) -> Iterator[tuple[int, ...]]:
        if pos == n:
            if constraint.final_ok(sizes):
                yield tuple(labels)
            return
        rem = n - pos - 1
        b = len(sizes)
        for lab in range(1, b + 1):
            labels[pos] = lab
            sizes[lab - 1] += 1
            if constraint.feasible(sizes, rem):
                yield from rec(pos + 1)
            sizes[lab - 1] -= 1
        if b < k:
            labels[pos] = b + 1
            sizes.append(1)
            if constraint.feasible(sizes, rem):
                yield from rec(pos + 1)
            sizes.pop()

    yield from rec(0)


def enumerate_classes(
    n: int, k: int, kind: SpaceKind, beta: float = 1.0
) -> Iterator[Assignment]:
    """One canonical representative per equivalence class in the space.

    Canonical form: labels renumbered by order of first occurrence, so
    node 0 always carries label 1.  Yields in lexicographic order of
    the label vectors.
    """
    constraint = _constraint_for(n, k, kind, beta)
    for labels in _enumerate_label_tuples(n, k, constraint):
        yield Assignment(labels, k)


def count_classes(n: int, k: int, kind: SpaceKind, beta: float = 1.0) -> int:
    """Exact number of equivalence classes in the space.

    Classes biject with set partitions of the nodes into exactly K
    blocks with admissible sizes, counted per size multiset as
    n! / (prod_k s_k! * prod_sizes mult!).
    """
    constraint = _constraint_for(n, k, kind, beta)
    total = 0
    seen: set[tuple[int, ...]] = set()
    for profile in constraint.size_multisets():
        if profile in seen:
            continue
        seen.add(profile)
        count = math.factorial(n)
        for s in profile:
            count //= math.factorial(s)
        for mult in Counter(profile).values():
            count //= math.factorial(mult)
        total += count
    return total


@dataclass(frozen=True)
class ExhaustiveResult:
    assignment: Assignment
    objective: float
    ties: Optional[tuple[Assignment, ...]] = None


_MATRIX_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
_MATRIX_CACHE_LIMIT = 1 << 20  # classes; larger enumerations are streamed


def _class_matrix(n: int, k: int, constraint) -> tuple[np.ndarray, np.ndarray]:
    """(labels, within_pairs) for all classes, cached per constraint."""
    key = constraint.key()
    if key not in _MATRIX_CACHE:
        rows = list(_enumerate_label_tuples(n, k, constraint))
        labels = np.asarray(rows, dtype=np.int8).reshape(len(rows), n)
        pairs = np.zeros(len(rows), dtype=np.int64)
        for lab in range(1, k + 1):
            s = (labels == lab).sum(axis=1).astype(np.int64)
            pairs += s * (s - 1) // 2
        _MATRIX_CACHE[key] = (labels, pairs)
    return _MATRIX_CACHE[key]


def _batch_objectives(labels: np.ndarray, adj: np.ndarray, k: int, lam: float) -> np.ndarray:
    """T for each row of a class-label matrix; exact integer edge counts."""
    edges = np.zeros(labels.shape[0], dtype=np.float64)
    pairs = np.zeros(labels.shape[0], dtype=np.int64)
    for lab in range(1, k + 1):
        x = (labels == lab).astype(np.float64)
        edges += ((x @ adj) * x).sum(axis=1)
        s = x.sum(axis=1).astype(np.int64)
        pairs += s * (s - 1) // 2
    return edges / 2.0 - lam * pairs


def solve_exhaustive(
    graph: Graph,
    params: ModelParams,
    kind: SpaceKind,
    penalty: Penalty,
    cap: int = DEFAULT_CLASS_CAP,
    return_ties: bool = False,
) -> ExhaustiveResult:
    """Global maximizer of T over canonical class representatives.

    Ties are broken toward the lexicographically smallest canonical
    labeling (the enumeration order), deterministically.  Refuses with
    EnumerationCapError when the exact class count exceeds `cap`.
    """
    n, k = params.n, params.k
    if graph.n != n:
        raise ValueError(f"graph has {graph.n} nodes but params.n = {n}")
    constraint = _constraint_for(n, k, kind, params.beta)
    total = count_classes(n, k, kind, params.beta)
    if total == 0:
        raise ValueError("the requested space contains no assignment for these (n, K)")
    if total > cap:
        raise EnumerationCapError(total, cap)
    adj = graph.adjacency.astype(np.float64)
    lam = penalty.lam

    best_t = -math.inf
    best_labels: Optional[tuple[int, ...]] = None
    tie_rows: list[tuple[int, ...]] = []

    if total <= _MATRIX_CACHE_LIMIT:
        labels, pairs = _class_matrix(n, k, constraint)
        edges = np.zeros(labels.shape[0], dtype=np.float64)
        for lab in range(1, k + 1):
            x = (labels == lab).astype(np.float64)
            edges += ((x @ adj) * x).sum(axis=1)
        t_all = edges / 2.0 - lam * pairs
        idx = int(np.argmax(t_all))  # first maximum = lexicographically smallest
        best_t = float(t_all[idx])
        best_labels = tuple(int(v) for v in labels[idx])
        if return_ties:
            tie_rows = [
                tuple(int(v) for v in labels[i]) for i in np.nonzero(t_all == best_t)[0]
            ]
    else:
        batch: list[tuple[int, ...]] = []

        def flush():
            nonlocal best_t, best_labels, tie_rows
            if not batch:
                return
            arr = np.asarray(batch, dtype=np.int8)
            t_vals = _batch_objectives(arr, adj, k, lam)
            i = int(np.argmax(t_vals))
            if t_vals[i] > best_t:
                best_t = float(t_vals[i])
                best_labels = batch[i]
                tie_rows = []
            if return_ties:
                tie_rows.extend(batch[j] for j in np.nonzero(t_vals == best_t)[0])
            batch.clear()

        for row in _enumerate_label_tuples(n, k, constraint):
            batch.append(row)
            if len(batch) >= 65536:
                flush()
        flush()

    assert best_labels is not None
    ties = tuple(Assignment(r, k) for r in tie_rows) if return_ties else None
    return ExhaustiveResult(Assignment(best_labels, k), best_t, ties)


def solve_greedy(
    graph: Graph,
    init: Assignment,
    penalty: Penalty,
    kind: SpaceKind,
    max_sweeps: int = 20,
    beta: float = 1.0,
) -> Assignment:
    """Node-wise reassignment heuristic for T; no optimality claim.

    Visits nodes in index order; each node moves to the label with the
    largest strictly positive gain among moves that keep the size
    constraints satisfied.  Stops after a sweep with no accepted move
    or after `max_sweeps`.  T never decreases across accepted moves.
    Note that an exactly balanced space (delta = 0) admits no single
    node move at all; give the space some slack for this solver to do
    anything.

    Gains are maintained incrementally via node-to-community edge
    counters; a move from k to k' changes T by
        (D[i,k'] - D[i,k]) - lambda * (n_{k'} - n_k + 1).
    """
    n, k = init.n, init.k
    if graph.n != n:
        raise ValueError(f"graph has {graph.n} nodes but init has {n}")
    constraint = _constraint_for(n, k, kind, beta)
    if not constraint.final_ok(list(init.sizes())):
        raise ValueError("init violates the size constraints of the requested space")
    adj = graph.adjacency.astype(np.int64)
    labels = init.as_array().copy()
    onehot = np.zeros((n, k), dtype=np.int64)
    onehot[np.arange(n), labels - 1] = 1
    degree_to = adj @ onehot  # D[i, c-1] = edges from i into community c
    sizes = onehot.sum(axis=0)
    lam = penalty.lam

    for _ in range(max_sweeps):
        changed = False
        for i in range(n):
            cur = int(labels[i]) - 1
            gains = (degree_to[i] - degree_to[i, cur]) - lam * (sizes - (sizes[cur] - 1))
            gains[cur] = 0.0
            order = np.argsort(-gains, kind="stable")
            for tgt in order:
                tgt = int(tgt)
                if tgt == cur or gains[tgt] <= 0.0:
                    break
                new_sizes = sizes.copy()
                new_sizes[cur] -= 1
                new_sizes[tgt] += 1
                if constraint.final_ok(new_sizes.tolist()):
                    labels[i] = tgt + 1
                    sizes = new_sizes
                    degree_to[:, cur] -= adj[:, i]
                    degree_to[:, tgt] += adj[:, i]
                    changed = True
                    break
        if not changed:
            break
    return Assignment(tuple(int(v) for v in labels), k)
