"""Computable bound quantities for penalized likelihood community detection.

Implements, at finite n, every inequality ingredient used by the risk
analysis: the moment generating function of a Bernoulli difference and
its minimizing tilt, the pairwise Chernoff bound exp(-(alpha ^ gamma) I),
combinatorial lower bounds on alpha ^ gamma, the equivalence-class
cardinality bound min{(enK/m)^m, K^n}, exact two-binomial tail
probabilities, the hardest community-size profiles, and the one-node
Bayes test those profiles reduce to.

Probabilities are computed exactly in rational arithmetic on small
instances and carried in log-space otherwise; reports store each
probability together with its log value.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from .core import Assignment, Graph, ModelParams, renyi_divergence
from .estimator import Penalty, lambda_unified, t_star
from .loss import alpha_gamma

__all__ = [
    "mgf",
    "chernoff_bound",
    "chernoff_bound_log",
    "exact_flip_probability",
    "min_alpha_gamma_bound",
    "min_eta_to_repair",
    "cardinality_bound",
    "binomial_tail_exact",
    "binomial_tail_log",
    "construct_least_favorable",
    "LeastFavorable",
    "local_bayes_test",
    "LocalTestDecision",
    "BoundReport",
    "bound_report",
    "BETA_LIMIT",
    "FLIP_ENUM_CAP",
]

BETA_LIMIT = math.sqrt(5.0 / 3.0)

# Largest alpha + gamma for which the exact flip probability is computed;
# the symmetric-difference reduction makes this the effective instance size.
FLIP_ENUM_CAP = 22


def mgf(a: float, b: float, n: float, t: float) -> float:
    """Moment generating function of Z = X - Y, X ~ Ber(b/n), Y ~ Ber(a/n).

    M(t) = (e^t b/n + 1 - b/n) (e^{-t} a/n + 1 - a/n)

    At the minimizing tilt t*, M(t*) = (sqrt(ab)/n + sqrt((1-a/n)(1-b/n)))^2
    and -log M(t*) equals the order-1/2 Renyi divergence.
    """
    if not (0 <= b <= n and 0 <= a <= n):
        raise ValueError(f"rates must satisfy 0 <= a, b <= n, got a={a}, b={b}, n={n}")
    p, q = a / n, b / n
    return (math.exp(t) * q + 1.0 - q) * (math.exp(-t) * p + 1.0 - p)


def chernoff_bound_log(alpha: int, gamma: int, divergence: float) -> float:
    """log of the pairwise flip bound: -(min(alpha, gamma)) * I."""
    if alpha < 0 or gamma < 0:
        raise ValueError(f"alpha and gamma must be >= 0, got {alpha}, {gamma}")
    if divergence < 0:
        raise ValueError(f"divergence must be >= 0, got {divergence}")
    return -min(alpha, gamma) * divergence


def chernoff_bound(alpha: int, gamma: int, divergence: float) -> float:
    """exp(-(alpha ^ gamma) I), an upper bound on P(T(sigma) >= T(sigma0))."""
    return math.exp(chernoff_bound_log(alpha, gamma, divergence))


def exact_flip_probability(
    sigma0: Assignment,
    sigma: Assignment,
    params: ModelParams,
    penalty: Penalty,
    enum_cap: int = FLIP_ENUM_CAP,
) -> Fraction:
    """Exact P(T(sigma) >= T(sigma0)) under the homogeneous model at sigma0.

    Pairs whose within-community indicator agrees between the two
    assignments cancel in T(sigma) - T(sigma0), so only the alpha pairs
    (within sigma0, split by sigma) and gamma pairs (split by sigma0,
    joined by sigma) matter.  The flip event is

        sum of the gamma Ber(b/n) edges - sum of the alpha Ber(a/n) edges
            >= lambda * (gamma - alpha),

    and the sum over the 2^(alpha+gamma) edge patterns collapses to a
    double sum over the two edge counts.  Exact rational output.
    """
    if sigma0.n != sigma.n or sigma0.k != sigma.k:
        raise ValueError("assignments must share n and K")
    alpha, gamma = alpha_gamma(sigma, sigma0)
    if alpha + gamma > enum_cap:
        raise ValueError(
            f"instance too large: alpha + gamma = {alpha + gamma} exceeds the cap {enum_cap}"
        )
    p = Fraction(params.a) / params.n
    q = Fraction(params.b) / params.n
    threshold = Fraction(penalty.lam) * (gamma - alpha)

    pmf_x = _binom_pmf(gamma, q)   # between-pairs under sigma0 carry rate b/n
    pmf_y = _binom_pmf(alpha, p)   # within-pairs under sigma0 carry rate a/n
    total = Fraction(0)
    for y in range(alpha + 1):
        for x in range(gamma + 1):
            if Fraction(x - y) >= threshold:
                total += pmf_x[x] * pmf_y[y]
    return total


def _binom_pmf(m: int, prob: Fraction) -> list[Fraction]:
    pmf = []
    for x in range(m + 1):
        pmf.append(math.comb(m, x) * prob**x * (1 - prob) ** (m - x))
    return pmf


def c_beta(beta: float) -> float:
    """Constant in the large-m branch of the imbalance-aware pair bound.

    c_beta = (5 - 3 beta^2)^2 / (2 beta (1 + 3 (5 - 3 beta^2)^2)),
    defined for 1 <= beta < sqrt(5/3).
    """
    if not (1.0 <= beta < BETA_LIMIT):
        raise ValueError(f"beta must lie in [1, sqrt(5/3)), got {beta}")
    u = (5.0 - 3.0 * beta * beta) ** 2
    return u / (2.0 * beta * (1.0 + 3.0 * u))


def min_alpha_gamma_bound(
    n: int, k: int, m: int, beta: float = 1.0, eta: float = 0.0
) -> float:
    """Lower bound on min(alpha, gamma) over assignments at class distance m.

    For beta = 1:
        (1 - eta) n m / K - m^2          if m <= n / (2K)
        2 (1 - eta) n m / (9K)           if m >  n / (2K)
    For 1 < beta < sqrt(5/3):
        (1 - eta) n m / (K beta) - m^2   if m <= n / (2K)
        (1 - eta) c_beta n m / K         if m >  n / (2K)

    `eta` is an asymptotic slack with no canonical finite-n value; the
    default 0 gives the raw finite-n expressions.  The result is clamped
    at 0 since min(alpha, gamma) is a nonnegative integer.
    """
    if not (0 < m < n):
        raise ValueError(f"need 0 < m < n, got m={m}, n={n}")
    if not (0.0 <= eta <= 1.0):
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if not (1.0 <= beta < BETA_LIMIT):
        raise ValueError(f"beta must lie in [1, sqrt(5/3)), got {beta}")
    small_m = m <= n / (2 * k)
    if beta == 1.0:
        value = (1.0 - eta) * n * m / k - m * m if small_m else 2.0 * (1.0 - eta) * n * m / (9.0 * k)
    else:
        value = (
            (1.0 - eta) * n * m / (k * beta) - m * m
            if small_m
            else (1.0 - eta) * c_beta(beta) * n * m / k
        )
    return max(0.0, value)


def min_eta_to_repair(n: int, k: int, m: int, observed: int, beta: float = 1.0) -> float:
    """Smallest eta for which min_alpha_gamma_bound(..., eta) <= observed."""
    if min_alpha_gamma_bound(n, k, m, beta, 0.0) <= observed:
        return 0.0
    small_m = m <= n / (2 * k)
    if small_m:
        lead = n * m / (k * beta)
        eta = 1.0 - (observed + m * m) / lead
    else:
        lead = 2.0 * n * m / (9.0 * k) if beta == 1.0 else c_beta(beta) * n * m / k
        eta = 1.0 - observed / lead
    return min(1.0, max(0.0, eta))


def cardinality_bound(n: int, k: int, m: int) -> float:
    """log of min{(enK/m)^m, K^n}.

    Bounds the number of equivalence classes containing an assignment at
    class distance m from a reference assignment.
    """
    if not (0 < m < n):
        raise ValueError(f"need 0 < m < n, got m={m}, n={n}")
    return min(m * (1.0 + math.log(n * k / m)), n * math.log(k))


def binomial_tail_exact(
    n_prime: int, a: float, b: float, n: float, strict: bool = False
) -> Fraction:
    """Exact P(Bin(n', b/n) >= Bin(n', a/n)), or strict >, the two sums independent.

    Convolves the two binomial mass functions in exact rational
    arithmetic; use binomial_tail_log for a log-space float route.
    """
    if n_prime < 1:
        raise ValueError(f"n_prime must be >= 1, got {n_prime}")
    if not (0 <= b <= n and 0 <= a <= n):
        raise ValueError(f"rates must satisfy 0 <= a, b <= n, got a={a}, b={b}")
    p = Fraction(a) / Fraction(n)
    q = Fraction(b) / Fraction(n)
    pmf_x = _binom_pmf(n_prime, q)
    pmf_y = _binom_pmf(n_prime, p)
    # ccdf_x[v] = P(X >= v), with the out-of-range cell equal to 0
    ccdf_x = [Fraction(0)] * (n_prime + 2)
    for v in range(n_prime, -1, -1):
        ccdf_x[v] = ccdf_x[v + 1] + pmf_x[v]
    shift = 1 if strict else 0
    return sum((pmf_y[y] * ccdf_x[y + shift] for y in range(n_prime + 1)), Fraction(0))


def binomial_tail_log(
    n_prime: int, a: float, b: float, n: float, strict: bool = False
) -> float:
    """log P(Bin(n', b/n) >= Bin(n', a/n)) via log-space convolution.

    Stable for large n' where the rational route gets heavy; agrees
    with binomial_tail_exact to floating accuracy.
    """
    if n_prime < 1:
        raise ValueError(f"n_prime must be >= 1, got {n_prime}")
    p, q = a / n, b / n
    support = np.arange(n_prime + 1)
    log_pmf_x = binom.logpmf(support, n_prime, q)
    log_pmf_y = binom.logpmf(support, n_prime, p)
    # suffix log-sum-exp: log P(X >= v)
    log_ccdf_x = np.full(n_prime + 2, -np.inf)
    for v in range(n_prime, -1, -1):
        log_ccdf_x[v] = np.logaddexp(log_ccdf_x[v + 1], log_pmf_x[v])
    shift = 1 if strict else 0
    terms = log_pmf_y + log_ccdf_x[shift : n_prime + 1 + shift]
    return float(logsumexp(terms))


@dataclass(frozen=True)
class LeastFavorable:
    """Hardest community-size profiles at (n, K).

    For K >= 3 the sizes take values in {base-1, base, base+1} with
    base = floor(n/K), using a decomposition K = K1 + K2 + K3 with
    base*K1 + (base+1)*K2 + (base-1)*K3 = n.  For K = 2 the profiles
    are the near-halves of n (two profiles when n is even).  `eps` is
    the largest constant for which eps*K < min(K1, K2) and
    max(K1, K2) < (1 - eps)*K both hold (0 for degenerate corners).
    """

    n: int
    k: int
    base: int
    k1: Optional[int]
    k2: Optional[int]
    k3: Optional[int]
    profiles: tuple[tuple[int, ...], ...]
    eps: float

    def sizes(self) -> tuple[int, ...]:
        """The first (primary) size profile, sorted ascending."""
        return self.profiles[0]


def construct_least_favorable(n: int, k: int) -> LeastFavorable:
    """Community-size profiles that make detection hardest.

    K >= 3: split K = K1 + K2 + K3 by the remainder r = n - floor(n/K)*K:
      r = 0        -> (K - 2*floor(K/3), floor(K/3), floor(K/3))
      0 < r < K/3  -> (K - 2*floor(K/3) - r, floor(K/3) + r, floor(K/3))
      r >= K/3     -> (K - r, r, 0)
    All branches satisfy base*K1 + (base+1)*K2 + (base-1)*K3 = n and keep
    every size in {base-1, base, base+1}.  Sizes of 0 never occur except
    through the all-singletons fallback at n = K.

    K = 2: (floor(n/2), ceil(n/2)) when n is odd; both (n/2, n/2) and
    (n/2 - 1, n/2 + 1) when n is even.
    """
    if k < 2:
        raise ValueError(f"need K >= 2, got {k}")
    if n < k:
        raise ValueError(f"need n >= K for nonempty communities, got n={n}, K={k}")
    if k == 2:
        half = n // 2
        if n % 2 == 1:
            profiles: tuple[tuple[int, ...], ...] = ((half, half + 1),)
        elif half - 1 >= 1:
            profiles = ((half, half), (half - 1, half + 1))
        else:
            profiles = ((half, half),)
        return LeastFavorable(n, k, half, None, None, None, profiles, eps=0.5)

    base = n // k
    r = n - base * k
    third = k // 3
    if r == 0:
        k1, k2, k3 = k - 2 * third, third, third
    elif r < k / 3:
        k1, k2, k3 = k - 2 * third - r, third + r, third
    else:
        k1, k2, k3 = k - r, r, 0
    if k3 > 0 and base - 1 < 1:
        # base = 1 leaves no room for a smaller community
        k1, k2, k3 = k - r, r, 0
    if k2 == 0 and k3 == 0:
        # n == K: the all-singletons profile is the only one
        k1, k2, k3 = k, 0, 0
    sizes = tuple(sorted([base] * k1 + [base + 1] * k2 + [base - 1] * k3))
    assert sum(sizes) == n and all(s >= 1 for s in sizes)
    if min(k1, k2) > 0:
        eps = min(min(k1, k2) / k, 1.0 - max(k1, k2) / k) / 2.0
    else:
        eps = 0.0
    return LeastFavorable(n, k, base, k1, k2, k3, (sizes,), eps=eps)


class LocalTestDecision(enum.Enum):
    KEEP = "keep"
    SWITCH = "switch"


def local_bayes_test(
    graph: Graph, j0: Iterable[int], j1: Iterable[int], node: int = 0
) -> LocalTestDecision:
    """Posterior-mode test for one node between two candidate communities.

    Keeps the current label iff the node has at least as many edges into
    J0 (its own community, node excluded) as into J1 (the challenger);
    ties keep.
    """
    s0, s1 = set(j0), set(j1)
    if s0 & s1:
        raise ValueError(f"J0 and J1 must be disjoint, overlap {sorted(s0 & s1)[:5]}")
    if node in s0 or node in s1:
        raise ValueError(f"node {node} must be excluded from both sets")
    row = graph.adjacency[node]
    deg0 = int(row[sorted(s0)].sum()) if s0 else 0
    deg1 = int(row[sorted(s1)].sum()) if s1 else 0
    return LocalTestDecision.KEEP if deg0 >= deg1 else LocalTestDecision.SWITCH


@dataclass(frozen=True)
class BoundReport:
    """All computable bound quantities at one parameter point.

    Probabilities are stored alongside their log values.  The field
    `tail_rate_ratio` is the diagnostic n' * I / (-log tail_exact): the
    mgf bound forces -log tail >= n' * I, so the ratio lies in (0, 1]
    and climbs toward 1 in the regime where the tail lower bound is
    tight.
    """

    n: int
    k: int
    a: float
    b: float
    beta: float
    renyi: float
    t_star: float
    mgf_min: float
    log_mgf_min: float
    penalty_lambda: float
    m: Optional[int] = None
    min_alpha_gamma: Optional[float] = None
    chernoff: Optional[float] = None
    log_chernoff: Optional[float] = None
    log_cardinality: Optional[float] = None
    n_prime: Optional[int] = None
    tail_exact: Optional[float] = None
    log_tail_exact: Optional[float] = None
    tail_strict: Optional[float] = None
    log_tail_strict: Optional[float] = None
    tail_rate_ratio: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "a": self.a,
            "b": self.b,
            "beta": self.beta,
            "renyi": self.renyi,
            "t_star": self.t_star,
            "mgf_min": self.mgf_min,
            "log_mgf_min": self.log_mgf_min,
            "penalty_lambda": self.penalty_lambda,
            "m": self.m,
            "min_alpha_gamma": self.min_alpha_gamma,
            "chernoff": self.chernoff,
            "log_chernoff": self.log_chernoff,
            "log_cardinality": self.log_cardinality,
            "n_prime": self.n_prime,
            "tail_exact": self.tail_exact,
            "log_tail_exact": self.log_tail_exact,
            "tail_strict": self.tail_strict,
            "log_tail_strict": self.log_tail_strict,
            "tail_rate_ratio": self.tail_rate_ratio,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _log_fraction(x: Fraction) -> float:
    if x == 0:
        return -math.inf
    return math.log(x.numerator) - math.log(x.denominator)


_TAIL_EXACT_LIMIT = 500


def bound_report(
    params: ModelParams,
    m: Optional[int] = None,
    n_prime: Optional[int] = None,
    eta: float = 0.0,
) -> BoundReport:
    """Assemble the bound quantities for one parameter point.

    `m` defaults to 1 (nearest rival class); `n_prime` defaults to
    floor(n/K), the size used by the one-node reduction.
    """
    n, k, a, b, beta = params.n, params.k, params.a, params.b, params.beta
    divergence = renyi_divergence(a, b, n)
    ts = t_star(a, b, n)
    m_min = mgf(a, b, n, ts)
    pen = lambda_unified(a, b, n)
    m = 1 if m is None else m
    n_prime = n // k if n_prime is None else n_prime

    if 1.0 <= beta < BETA_LIMIT and 0 < m < n:
        mag = min_alpha_gamma_bound(n, k, m, beta, eta)
        log_cher = -mag * divergence
        cher = math.exp(log_cher)
    else:
        mag = log_cher = cher = None
    log_card = cardinality_bound(n, k, m) if 0 < m < n else None

    if n_prime >= 1:
        if n_prime <= _TAIL_EXACT_LIMIT:
            tail_frac = binomial_tail_exact(n_prime, a, b, n)
            tail_s_frac = binomial_tail_exact(n_prime, a, b, n, strict=True)
            tail, tail_s = float(tail_frac), float(tail_s_frac)
            log_tail = _log_fraction(tail_frac)
            log_tail_s = _log_fraction(tail_s_frac)
        else:
            log_tail = binomial_tail_log(n_prime, a, b, n)
            log_tail_s = binomial_tail_log(n_prime, a, b, n, strict=True)
            tail = math.exp(log_tail)
            tail_s = math.exp(log_tail_s)
        ratio = (n_prime * divergence / -log_tail) if log_tail < 0 else None
    else:
        tail = tail_s = log_tail = log_tail_s = ratio = None

    return BoundReport(
        n=n,
        k=k,
        a=a,
        b=b,
        beta=beta,
        renyi=divergence,
        t_star=ts,
        mgf_min=m_min,
        log_mgf_min=math.log(m_min),
        penalty_lambda=pen.lam,
        m=m,
        min_alpha_gamma=mag,
        chernoff=cher,
        log_chernoff=log_cher,
        log_cardinality=log_card,
        n_prime=n_prime,
        tail_exact=float(tail) if tail is not None else None,
        log_tail_exact=log_tail,
        tail_strict=float(tail_s) if tail_s is not None else None,
        log_tail_strict=log_tail_s,
        tail_rate_ratio=ratio,
    )
